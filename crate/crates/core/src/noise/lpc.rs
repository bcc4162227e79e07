/// Biased autocorrelation `r[0..=order]`.
pub fn autocorrelation(x: &[f64], order: usize) -> Vec<f64> {
    (0..=order)
        .map(|lag| {
            if lag >= x.len() {
                0.0
            } else {
                x[..x.len() - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

/// Levinson-Durbin recursion.
///
/// Returns the prediction polynomial `[1, a1, .., ap]` of
/// `A(z) = 1 + sum a_k z^-k` and the final prediction error, or `None` if
/// `r[0]` is not positive or the recursion becomes unstable.
pub fn levinson(r: &[f64]) -> Option<(Vec<f64>, f64)> {
    let order = r.len().checked_sub(1)?;
    if !(r[0] > 0.0) {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    let mut prev = a.clone();
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| prev[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        if !(k.abs() < 1.0) {
            return None;
        }
        a[i] = k;
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        err *= 1.0 - k * k;
        prev.copy_from_slice(&a);
    }
    Some((a, err))
}

/// Runs `x` through the all-pole filter `1 / A(z)`.
pub fn all_pole_filter(a: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        let mut v = x[n];
        for (k, &ak) in a.iter().enumerate().skip(1).take(n) {
            v -= ak * y[n - k];
        }
        y[n] = v;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_ar2_coefficients() {
        // x[n] = 1.3 x[n-1] - 0.6 x[n-2] + e[n] has A(z) = 1 - 1.3 z^-1 + 0.6 z^-2.
        // Oracle: the exact AR(2) autocorrelation from the Yule-Walker
        // equations, r1 = a r0 / (1 - b), r2 = a r1 + b r0.
        let (a1, a2) = (1.3, -0.6);
        let r0 = 1.0;
        let r1 = a1 * r0 / (1.0 - a2);
        let r2 = a1 * r1 + a2 * r0;
        let (a, _) = levinson(&[r0, r1, r2]).unwrap();
        assert!((a[1] + 1.3).abs() < 1e-12);
        assert!((a[2] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn filter_impulse_response() {
        let y = all_pole_filter(&[1.0, -0.5], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(y, vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn degenerate_input() {
        assert!(levinson(&[0.0, 0.0]).is_none());
        assert!(levinson(&[]).is_none());
        assert_eq!(autocorrelation(&[1.0, 2.0], 3), vec![5.0, 2.0, 0.0, 0.0]);
    }
}
