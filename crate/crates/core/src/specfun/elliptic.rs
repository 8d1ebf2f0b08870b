use crate::real::{int, to_f64, Real};

use super::SpecFunError;

const MAX_AGM: usize = 64;

/// `(sn, cn, dn)` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple<T> {
    pub sn: T,
    pub cn: T,
    pub dn: T,
}

fn check_modulus<T: Real>(k: T) -> Result<T, SpecFunError> {
    let k2 = k * k;
    if !(k2 < T::one()) {
        return Err(SpecFunError::ModulusOutOfRange(to_f64(k)));
    }
    Ok(k2)
}

/// Jacobi elliptic functions of modulus `k` by the descending
/// arithmetic-geometric mean.
pub fn jacobi_elliptic<T: Real>(u: T, k: T) -> Result<JacobiTriple<T>, SpecFunError> {
    let k2 = check_modulus(k)?;
    if !u.is_finite() {
        return Err(SpecFunError::DomainError(format!("jacobi_elliptic(u = {})", to_f64(u))));
    }
    if k2 == T::zero() {
        return Ok(JacobiTriple { sn: u.sin(), cn: u.cos(), dn: T::one() });
    }
    let two = int::<T>(2);
    let mut a = [T::zero(); MAX_AGM + 1];
    let mut c = [T::zero(); MAX_AGM + 1];
    a[0] = T::one();
    c[0] = k.abs();
    let mut b = (T::one() - k2).sqrt();
    let mut n = 0;
    while c[n].abs() > T::epsilon() * a[n] {
        if n == MAX_AGM {
            return Err(SpecFunError::ConvergenceFailure(format!("AGM for k = {}", to_f64(k))));
        }
        let an = a[n];
        a[n + 1] = (an + b) / two;
        c[n + 1] = (an - b) / two;
        b = (an * b).sqrt();
        n += 1;
    }
    let mut phi = two.powi(n as i32) * a[n] * u;
    for j in (1..=n).rev() {
        phi = (phi + (c[j] / a[j] * phi.sin()).asin()) / two;
    }
    let sn = phi.sin();
    let cn = phi.cos();
    // dn > 0 for k² < 1; the cn/cos(φ₁-φ₀) form loses digits near cn = 0
    let dn = (T::one() - k2 * sn * sn).sqrt();
    Ok(JacobiTriple { sn, cn, dn })
}

/// `cn(u, k)`, `k` the modulus (not the parameter `k²`).
pub fn jacobi_cn<T: Real>(u: T, k: T) -> Result<T, SpecFunError> {
    jacobi_elliptic(u, k).map(|t| t.cn)
}

/// Complete elliptic integral of the first kind `K(k) = π / (2 AGM(1, √(1-k²)))`.
pub fn complete_elliptic_k<T: Real>(k: T) -> Result<T, SpecFunError> {
    let k2 = check_modulus(k)?;
    let two = int::<T>(2);
    let mut a = T::one();
    let mut b = (T::one() - k2).sqrt();
    for _ in 0..MAX_AGM {
        if (a - b).abs() <= T::epsilon() * a {
            return Ok(T::PI() / (two * a));
        }
        let next = (a + b) / two;
        b = (a * b).sqrt();
        a = next;
    }
    Err(SpecFunError::ConvergenceFailure(format!("AGM for k = {}", to_f64(k))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Classical RK4 on sn' = cn dn, cn' = -sn dn, dn' = -k² sn cn.
    fn rk4_oracle(k: f64, u_end: f64, steps: usize) -> Vec<(f64, f64)> {
        let k2 = k * k;
        let rhs = |s: [f64; 3]| [s[1] * s[2], -s[0] * s[2], -k2 * s[0] * s[1]];
        let h = u_end / steps as f64;
        let mut s = [0.0, 1.0, 1.0];
        let mut out = vec![(0.0, 1.0)];
        for i in 0..steps {
            let k1 = rhs(s);
            let k2_ = rhs([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1], s[2] + 0.5 * h * k1[2]]);
            let k3 = rhs([s[0] + 0.5 * h * k2_[0], s[1] + 0.5 * h * k2_[1], s[2] + 0.5 * h * k2_[2]]);
            let k4 = rhs([s[0] + h * k3[0], s[1] + h * k3[1], s[2] + h * k3[2]]);
            for j in 0..3 {
                s[j] += h / 6.0 * (k1[j] + 2.0 * k2_[j] + 2.0 * k3[j] + k4[j]);
            }
            out.push(((i + 1) as f64 * h, s[1]));
        }
        out
    }

    #[test]
    fn cn_matches_rk4_oracle() {
        for &k in &[0.3f64, 0.5f64.sqrt(), 0.95] {
            for (u, cn) in rk4_oracle(k, 4.0, 8000).into_iter().step_by(200) {
                let got = jacobi_cn(u, k).unwrap();
                assert!((got - cn).abs() < 1e-9, "k={k} u={u}: {got} vs {cn}");
                assert!(got.abs() <= 1.0);
            }
        }
    }

    #[test]
    fn cn_reference_at_one() {
        // frozen from the RK4 oracle above (and 40-digit mpmath: 0.59597656767214067402)
        let got = jacobi_cn(1.0f64, 0.5f64.sqrt()).unwrap();
        assert!((got - 0.5959765676721407).abs() < 1e-12);
    }

    #[test]
    fn cn_trivial_points() {
        assert_eq!(jacobi_cn(0.0f64, 0.6).unwrap(), 1.0);
        for &k in &[0.1f64, 0.5f64.sqrt(), 0.99] {
            let kk = complete_elliptic_k(k).unwrap();
            assert!(jacobi_cn(kk, k).unwrap().abs() < 1e-12);
        }
        assert_relative_eq!(jacobi_cn(1.3f64, 0.0).unwrap(), 1.3f64.cos());
    }

    #[test]
    fn identities() {
        let k = 0.8f64;
        for i in 0..50 {
            let u = -5.0 + 0.23 * i as f64;
            let t = jacobi_elliptic(u, k).unwrap();
            assert!((t.sn * t.sn + t.cn * t.cn - 1.0).abs() < 1e-14);
            assert!((t.dn * t.dn + k * k * t.sn * t.sn - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn complete_k_reference() {
        // 40-digit mpmath ellipk(1/2)
        assert_relative_eq!(
            complete_elliptic_k(0.5f64.sqrt()).unwrap(),
            1.854074677301371918433850347195260046218,
            max_relative = 1e-14
        );
        assert_relative_eq!(complete_elliptic_k(0.0f64).unwrap(), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn modulus_out_of_range() {
        assert!(matches!(jacobi_cn(1.0f64, 1.0), Err(SpecFunError::ModulusOutOfRange(_))));
        assert!(matches!(complete_elliptic_k(1.2f64), Err(SpecFunError::ModulusOutOfRange(_))));
    }
}
