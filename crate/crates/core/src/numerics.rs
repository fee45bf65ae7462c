//! Small self-contained numerical routines: a cyclic Jacobi eigensolver for
//! Hermitian matrices, a fixed-schedule Nelder-Mead minimizer and a least
//! squares line fit. Kept dependency-free; these run on matrices of dimension
//! a few hundred at most.

use crate::C64;
use ndarray::Array2;

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations, ascending.
pub(crate) fn eigvalsh(m: &Array2<C64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut a = m.clone();
    // scale sets the convergence threshold
    let scale: f64 = a
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[[p, q]].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                let r = apq.norm();
                if r <= tol {
                    continue;
                }
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let phase = apq / r; // e^{i phi}
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p,q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                let upp = C64::new(c, 0.0);
                let upq = C64::new(s, 0.0);
                let uqp = -s * phase.conj();
                let uqq = c * phase.conj();
                // columns: A <- A U
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = akp * upp + akq * uqp;
                    a[[k, q]] = akp * upq + akq * uqq;
                }
                // rows: A <- U^dag A
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = upp.conj() * apk + uqp.conj() * aqk;
                    a[[q, k]] = upq.conj() * apk + uqq.conj() * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Nelder-Mead minimization in two variables with a fixed iteration budget.
/// Deterministic: no randomness, ties resolved by index order.
pub(crate) fn nelder_mead_2d<F>(
    f: F,
    start: (f64, f64),
    scale: f64,
    iters: usize,
) -> ((f64, f64), f64)
where
    F: Fn(f64, f64) -> f64,
{
    let mut simplex = [
        (start.0, start.1),
        (start.0 + scale, start.1),
        (start.0, start.1 + scale),
    ];
    let mut fv = [0.0f64; 3];
    for i in 0..3 {
        fv[i] = f(simplex[i].0, simplex[i].1);
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    for _ in 0..iters {
        // order: best, middle, worst
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap());
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        let centroid = (
            (simplex[b].0 + simplex[m].0) / 2.0,
            (simplex[b].1 + simplex[m].1) / 2.0,
        );
        let refl = (
            centroid.0 + alpha * (centroid.0 - simplex[w].0),
            centroid.1 + alpha * (centroid.1 - simplex[w].1),
        );
        let fr = f(refl.0, refl.1);
        if fr < fv[b] {
            let exp = (
                centroid.0 + gamma * (refl.0 - centroid.0),
                centroid.1 + gamma * (refl.1 - centroid.1),
            );
            let fe = f(exp.0, exp.1);
            if fe < fr {
                simplex[w] = exp;
                fv[w] = fe;
            } else {
                simplex[w] = refl;
                fv[w] = fr;
            }
        } else if fr < fv[m] {
            simplex[w] = refl;
            fv[w] = fr;
        } else {
            let contr = (
                centroid.0 + rho * (simplex[w].0 - centroid.0),
                centroid.1 + rho * (simplex[w].1 - centroid.1),
            );
            let fc = f(contr.0, contr.1);
            if fc < fv[w] {
                simplex[w] = contr;
                fv[w] = fc;
            } else {
                for i in 0..3 {
                    if i != b {
                        simplex[i] = (
                            simplex[b].0 + sigma * (simplex[i].0 - simplex[b].0),
                            simplex[b].1 + sigma * (simplex[i].1 - simplex[b].1),
                        );
                        fv[i] = f(simplex[i].0, simplex[i].1);
                    }
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if fv[i] < fv[best] {
            best = i;
        }
    }
    (simplex[best], fv[best])
}

/// Least-squares line fit y = slope x + intercept; returns (slope, intercept,
/// RMS residual).
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_pauli_x() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 1]] = C64::new(1.0, 0.0);
        m[[1, 0]] = C64::new(1.0, 0.0);
        let ev = eigvalsh(&m);
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_complex_hermitian() {
        // [[2, i],[-i, 2]] has eigenvalues 1 and 3
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = C64::new(2.0, 0.0);
        m[[1, 1]] = C64::new(2.0, 0.0);
        m[[0, 1]] = C64::new(0.0, 1.0);
        m[[1, 0]] = C64::new(0.0, -1.0);
        let ev = eigvalsh(&m);
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_trace_moments() {
        // deterministic pseudo-random Hermitian via an LCG
        let n = 12;
        let mut seed = 0x2545F491u64;
        let mut randf = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = C64::new(randf(), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(randf(), randf());
                m[[i, j]] = z;
                m[[j, i]] = z.conj();
            }
        }
        let ev = eigvalsh(&m);
        let tr: f64 = (0..n).map(|i| m[[i, i]].re).sum();
        let tr2: f64 = m.dot(&m).diag().iter().map(|z| z.re).sum();
        assert_abs_diff_eq!(ev.iter().sum::<f64>(), tr, epsilon = 1e-10);
        assert_abs_diff_eq!(ev.iter().map(|l| l * l).sum::<f64>(), tr2, epsilon = 1e-10);
    }

    #[test]
    fn nelder_mead_quadratic_bowl() {
        let f = |x: f64, y: f64| (x - 0.3).powi(2) + 2.0 * (y + 1.2).powi(2);
        let ((x, y), v) = nelder_mead_2d(f, (0.0, 0.0), 0.5, 200);
        assert!(v < 1e-12);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-5);
        assert_abs_diff_eq!(y, -1.2, epsilon = 1e-5);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (a, b, r) = linear_fit(&xs, &ys);
        assert_abs_diff_eq!(a, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-12);
        assert!(r < 1e-12);
    }
}
