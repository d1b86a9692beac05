use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]` with `q` points, abscissae ascending.
///
/// The rule is mirrored so that nodes and weights are exactly symmetric.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1, "a Gauss rule needs at least one point");
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    let half = q.div_ceil(2);
    for i in 0..half {
        // Chebyshev-like initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[q - 1 - i] = z;
        x[i] = -z;
        w[q - 1 - i] = wi;
        w[i] = wi;
    }
    if q % 2 == 1 {
        x[q / 2] = 0.0;
    }
    (x, w)
}

/// Legendre polynomial `P_q(z)` and its derivative.
fn legendre(q: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
