//! Brute-force epsilon-SVR dual solver used as a test oracle: accelerated
//! projected gradient on the `(alpha, alpha*)` QP, with the projection onto
//! the box and the equality constraint found by bisection.

use knowattn::svr::Kernel;

pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub x: Vec<Vec<f64>>,
}

impl OracleSolution {
    pub fn coefficients(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.alpha_star).map(|(a, b)| a - b).collect()
    }

    pub fn predict(&self, q: &[f64]) -> f64 {
        self.coefficients()
            .iter()
            .zip(&self.x)
            .map(|(c, xi)| c * self.kernel.eval(xi, q))
            .sum::<f64>()
            + self.bias
    }
}

/// Projects `(a, s)` onto `{0 <= a, s <= c, sum(a) = sum(s)}`.
fn project(a: &mut [f64], s: &mut [f64], c: f64) {
    let clip = |v: f64| v.clamp(0.0, c);
    let balance = |lam: f64, a: &[f64], s: &[f64]| -> f64 {
        a.iter().map(|&v| clip(v - lam)).sum::<f64>() - s.iter().map(|&v| clip(v + lam)).sum::<f64>()
    };
    let bound = a.iter().chain(s.iter()).fold(0.0f64, |m, v| m.max(v.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(mid, a, s) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    for v in a.iter_mut() {
        *v = clip(*v - lam);
    }
    for v in s.iter_mut() {
        *v = clip(*v + lam);
    }
}

pub fn solve(x: &[Vec<f64>], z: &[f64], kernel: Kernel, c: f64, eps: f64) -> OracleSolution {
    let n = x.len();
    let k: Vec<Vec<f64>> = x.iter().map(|a| x.iter().map(|b| kernel.eval(a, b)).collect()).collect();
    // Objective 0.5 g^T K g + eps * sum(a + s) - z^T g with g = a - s.
    // Its Hessian in (a, s) is [[K, -K], [-K, K]], whose norm is 2 * |K|.
    let lip = 2.0 * k.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lip.max(1e-12);
    let mut a = vec![0.0; n];
    let mut s = vec![0.0; n];
    let (mut ya, mut ys) = (a.clone(), s.clone());
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let g: Vec<f64> = (0..n).map(|i| ya[i] - ys[i]).collect();
        let kg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * g[j]).sum()).collect();
        let mut na: Vec<f64> = (0..n).map(|i| ya[i] - step * (kg[i] + eps - z[i])).collect();
        let mut ns: Vec<f64> = (0..n).map(|i| ys[i] - step * (-kg[i] + eps + z[i])).collect();
        project(&mut na, &mut ns, c);
        let nt = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let w = (t - 1.0) / nt;
        let moved = (0..n).map(|i| (na[i] - a[i]).abs() + (ns[i] - s[i]).abs()).fold(0.0, f64::max);
        ya = (0..n).map(|i| na[i] + w * (na[i] - a[i])).collect();
        ys = (0..n).map(|i| ns[i] + w * (ns[i] - s[i])).collect();
        a = na;
        s = ns;
        t = nt;
        if moved < 1e-15 {
            break;
        }
    }

    // Bias from the KKT conditions: free multipliers pin it, bounded ones
    // only constrain it to an interval whose midpoint we take.
    let g: Vec<f64> = (0..n).map(|i| a[i] - s[i]).collect();
    let f0: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * g[j]).sum()).collect();
    let thr = 1e-7 * c;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut pinned = Vec::new();
    for i in 0..n {
        let upper_side = z[i] - eps - f0[i];
        let lower_side = z[i] + eps - f0[i];
        if a[i] > thr && a[i] < c - thr {
            pinned.push(upper_side);
        } else if a[i] <= thr {
            lo = lo.max(upper_side);
        } else {
            hi = hi.min(upper_side);
        }
        if s[i] > thr && s[i] < c - thr {
            pinned.push(lower_side);
        } else if s[i] <= thr {
            hi = hi.min(lower_side);
        } else {
            lo = lo.max(lower_side);
        }
    }
    let bias = if pinned.is_empty() {
        0.5 * (lo + hi)
    } else {
        pinned.iter().sum::<f64>() / pinned.len() as f64
    };
    OracleSolution {
        alpha: a,
        alpha_star: s,
        bias,
        kernel,
        x: x.to_vec(),
    }
}
