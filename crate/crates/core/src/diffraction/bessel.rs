//! Bessel functions of the first kind, integer order, by Miller's
//! downward recurrence normalized with `J0 + 2 Σ J_2k = 1`.

/// `J_0(x) ..= J_{m_max}(x)` for `x ≥ 0`.
pub fn bessel_j_all(m_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = x.abs();
    // Start well above both the requested order and the turning point.
    let start = {
        let top = (m_max as f64).max(x);
        let n = top + 20.0 + (40.0 * top).sqrt();
        2 * ((n as usize) / 2 + 1)
    };
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        let order = k - 1;
        if order <= m_max {
            out[order] = cur;
        }
        if order % 2 == 0 && order > 0 {
            sum += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            // Keep the recurrence in range; every stored value scales alike.
            let s = 1e-250;
            cur *= s;
            next *= s;
            sum *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    sum += cur;
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

pub fn bessel_j(m: usize, x: f64) -> f64 {
    bessel_j_all(m, x)[m]
}

/// Truncated power series `Σ_{k<terms} (-1)^k (x/2)^{2k+m} / (k! (k+m)!)`,
/// used to validate the recurrence for moderate `x`.
pub fn bessel_j_series(m: usize, x: f64, terms: usize) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    for j in 1..=m {
        term *= half / j as f64;
    }
    let mut sum = 0.0;
    for k in 0..terms {
        if k > 0 {
            term *= -half * half / (k * (k + m)) as f64;
        }
        sum += term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    // Power series Σ (-1)^k (x/2)^{2k+m} / (k! (k+m)!), 60 terms.
    fn series(m: usize, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = (0..m).fold(1.0, |t, j| t * half / (j + 1) as f64);
        let mut sum = term;
        for k in 1..60 {
            term *= -half * half / (k as f64 * (k + m) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn matches_power_series() {
        for i in 0..=200 {
            let x = i as f64 * 0.05;
            let j = bessel_j_all(4, x);
            for (m, v) in j.iter().enumerate() {
                assert!((v - series(m, x)).abs() < 1e-10, "J_{m}({x}) = {v}");
            }
        }
    }

    #[test]
    fn known_values() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 2.404_825_557_695_773) - 0.519_147_497_289_466_7).abs() < 1e-14);
        assert!(bessel_j(0, 2.404_825_557_695_773).abs() < 1e-15);
        assert!((bessel_j(2, 50.0) - (-0.059_712_800_794_258_82)).abs() < 1e-13);
    }

    #[test]
    fn origin() {
        let j = bessel_j_all(5, 0.0);
        assert_eq!(j[0], 1.0);
        assert!(j[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sum_rule() {
        for x in [0.5, 1.0, 5.2, 30.0] {
            let j = bessel_j_all(60, x);
            let s = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-12, "x = {x}: {s}");
        }
    }

    #[test]
    fn high_order_underflow_is_graceful() {
        let j = bessel_j_all(400, 1.0);
        assert!(j.iter().all(|v| v.is_finite()));
        assert!(j[400].abs() < 1e-300);
    }
}
