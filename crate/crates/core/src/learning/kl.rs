use crate::error::{Error, Result};

/// `Σ_o p(o) · log2(p(o) / q(o))` in bits.
///
/// Returns `+∞` when `q` puts zero mass on a state that `p` supports.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DataMismatch(format!(
            "distributions over {} and {} states",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += a * (a / b).log2();
        }
    }
    // rounding can push the sum of a zero divergence slightly negative
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(kl_divergence(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        // 0.75·log2(1.5) + 0.25·log2(0.5)
        let expected = 0.75 * 1.5f64.log2() - 0.25;
        let got = kl_divergence(&[0.75, 0.25], &[0.5, 0.5]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.18872).abs() < 5e-6);
    }

    #[test]
    fn unsupported_state_is_infinite() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }
}
