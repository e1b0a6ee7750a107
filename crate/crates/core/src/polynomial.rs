//! Lag-polynomial utilities: stationarity/invertibility via reflection
//! coefficients, clamping into the admissible region, and MA(infinity)
//! expansion.
//!
//! AR coefficients `a` describe `1 - a_1 z - ... - a_p z^p`; MA coefficients
//! `b` use the plus-sign form `1 + b_1 z + ... + b_q z^q`.

/// Reflection coefficients (partial autocorrelations) of an AR polynomial,
/// or `None` when the step-down recursion meets `|r| >= 1`.
pub fn reflection_coefficients(ar: &[f64]) -> Option<Vec<f64>> {
    let mut a = ar.to_vec();
    let mut out = vec![0.0; ar.len()];
    for k in (0..ar.len()).rev() {
        let r = a[k];
        if !(r.abs() < 1.0) {
            return None;
        }
        out[k] = r;
        let denom = 1.0 - r * r;
        let prev: Vec<f64> = (0..k).map(|j| (a[j] + r * a[k - 1 - j]) / denom).collect();
        a = prev;
    }
    Some(out)
}

/// Inverse of [`reflection_coefficients`] (Levinson step-up).
pub fn from_reflection(reflections: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(reflections.len());
    for (k, &r) in reflections.iter().enumerate() {
        let mut next: Vec<f64> = (0..k).map(|j| a[j] - r * a[k - 1 - j]).collect();
        next.push(r);
        a = next;
    }
    a
}

/// All roots of `1 - sum a_j z^j` outside the unit circle.
pub fn is_stationary(ar: &[f64]) -> bool {
    ar.iter().all(|c| c.is_finite()) && reflection_coefficients(ar).is_some()
}

/// All roots of `1 + sum b_j z^j` outside the unit circle.
pub fn is_invertible(ma: &[f64]) -> bool {
    let negated: Vec<f64> = ma.iter().map(|b| -b).collect();
    is_stationary(&negated)
}

/// Pulls AR coefficients inside the stationary region so that every
/// reflection coefficient has magnitude at most `limit`. Returns the adjusted
/// coefficients and whether anything changed.
pub fn clamp_stationary(ar: &[f64], limit: f64) -> (Vec<f64>, bool) {
    let mut current = ar.to_vec();
    let mut changed = false;
    // Shrinking z by lambda moves every root outward; repeat until the
    // step-down recursion succeeds.
    while reflection_coefficients(&current).is_none() {
        changed = true;
        let mut scale = 1.0;
        for c in current.iter_mut() {
            scale *= 0.95;
            *c *= scale;
        }
    }
    let reflections = reflection_coefficients(&current).expect("stationary after shrink");
    if reflections.iter().all(|r| r.abs() <= limit) {
        return (current, changed);
    }
    let clamped: Vec<f64> = reflections.iter().map(|r| r.clamp(-limit, limit)).collect();
    (from_reflection(&clamped), true)
}

/// MA-convention counterpart of [`clamp_stationary`].
pub fn clamp_invertible(ma: &[f64], limit: f64) -> (Vec<f64>, bool) {
    let negated: Vec<f64> = ma.iter().map(|b| -b).collect();
    let (clamped, changed) = clamp_stationary(&negated, limit);
    (clamped.iter().map(|b| -b).collect(), changed)
}

/// First `count` weights of the MA(infinity) expansion of
/// `(1 - sum a_i B^i) y = (1 + sum b_j B^j) u`.
pub fn psi_expansion(ar: &[f64], ma: &[f64], count: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(count);
    for j in 0..count {
        let mut value = if j == 0 {
            1.0
        } else {
            ma.get(j - 1).copied().unwrap_or(0.0)
        };
        for i in 1..=ar.len().min(j) {
            value += ar[i - 1] * psi[j - i];
        }
        psi.push(value);
    }
    psi
}

/// Multiplies the AR polynomial by `(1 - B)^d`, returning coefficients in the
/// same `1 - sum a_j z^j` form.
pub fn integrate_ar(ar: &[f64], d: usize) -> Vec<f64> {
    // Work with full polynomial coefficients c_0 = 1, c_j = -a_j.
    let mut poly: Vec<f64> = std::iter::once(1.0).chain(ar.iter().map(|a| -a)).collect();
    for _ in 0..d {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c).collect()
}
