//! Adaptive second/third-order Rosenbrock integrator (the W-method pair
//! of Shampine and Reichelt) with a finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

fn jacobian(f: &dyn Fn(&DVector<f64>) -> DVector<f64>, y: &DVector<f64>, fy: &DVector<f64>) -> DMatrix<f64> {
    let n = y.len();
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let delta = f64::EPSILON.sqrt() * y[c].abs().max(1e-10);
        let mut yp = y.clone();
        yp[c] += delta;
        let col = (f(&yp) - fy) / delta;
        j.set_column(c, &col);
    }
    j
}

/// Integrates the autonomous system `y' = f(y)` from 0 to `t_end`.
pub fn integrate(
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    mut y: DVector<f64>,
    t_end: f64,
    tol: &Tolerances,
) -> (DVector<f64>, Stats) {
    let d = 1.0 / (2.0 + 2f64.sqrt());
    let e32 = 6.0 + 2f64.sqrt();
    let n = y.len();
    let mut t = 0.0;
    let mut h = t_end * 1e-8;
    let mut stats = Stats { accepted: 0, rejected: 0 };
    let mut f0 = f(&y);
    let mut jac = jacobian(f, &y, &f0);
    while t < t_end {
        h = h.min(t_end - t);
        let w = DMatrix::identity(n, n) - &jac * (h * d);
        let lu = w.lu();
        let k1 = lu.solve(&f0).expect("singular iteration matrix");
        let f1 = f(&(&y + &k1 * (0.5 * h)));
        let k2 = lu.solve(&(&f1 - &k1)).expect("singular iteration matrix") + &k1;
        let y_new = &y + &k2 * h;
        let f2 = f(&y_new);
        let rhs = &f2 - (&k2 - &f1) * e32 - (&k1 - &f0) * 2.0;
        let k3 = lu.solve(&rhs).expect("singular iteration matrix");
        let err = (&k1 - &k2 * 2.0 + &k3) * (h / 6.0);
        let mut norm: f64 = 0.0;
        for i in 0..n {
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            norm = norm.max(err[i].abs() / scale);
        }
        if norm <= 1.0 {
            t = if t_end - t <= h { t_end } else { t + h };
            y = y_new;
            f0 = f2;
            jac = jacobian(f, &y, &f0);
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.8 * norm.powf(-1.0 / 3.0)).clamp(0.2, 5.0) };
        h *= factor;
    }
    (y, stats)
}
