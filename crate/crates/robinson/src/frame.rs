use fieldexpr::{C64, EvalCtx, PointSample};
use nalgebra::DMatrix;

use crate::coframe::CoframeField;
use crate::error::{Result, RobinsonError};

pub const COND_LIMIT: f64 = 1e8;

/// Everything numeric about a coframe at one sample point: frame and metric
/// inverses, Christoffel symbols, and the covariant derivatives of the null
/// form and of the structure three-form.
pub struct PointData {
    pub m: usize,
    pub n: usize,
    pub cond: f64,
    /// Coframe matrix; row i holds the coordinate components of form i in
    /// the order kappa, theta^a, conj(theta^a), lambda.
    pub cframe: DMatrix<C64>,
    /// Inverse of `cframe`; column j is the frame vector dual to form j.
    pub frame: DMatrix<C64>,
    pub g: DMatrix<C64>,
    pub ginv: DMatrix<C64>,
    pub h: DMatrix<C64>,
    pub hinv: DMatrix<C64>,
    /// dkappa[mu][nu] = partial_mu kappa_nu.
    pub dkappa: Vec<C64>,
    /// Christoffel symbols, gamma[(s*n + mu)*n + nu].
    pub gamma: Vec<C64>,
    /// Covariant derivative (nabla kappa)_{ab}, derivative index first.
    pub nk: DMatrix<C64>,
    /// Structure three-form rho_{abc}, full antisymmetric storage.
    pub rho: Vec<C64>,
    /// (nabla rho)_{mu abc}, flat index (((mu*n + a)*n + b)*n + c).
    pub nr: Vec<C64>,
}

/// Frame vectors used to project covariant derivatives onto components.
/// Extraction routines accept these separately from the tensor source so
/// deformed derivatives can be contracted with undeformed legs.
#[derive(Clone)]
pub struct Legs {
    pub ell: Vec<C64>,
    pub e: Vec<Vec<C64>>,
    pub ebar: Vec<Vec<C64>>,
    pub k: Vec<C64>,
}

impl CoframeField {
    /// Evaluates the precomputed symbolic data at one sample and assembles
    /// the numeric frame, connection, and covariant derivatives.
    pub fn at(&self, p: &PointSample) -> Result<PointData> {
        let env = self.chart().env_for(p)?;
        let mut ev = EvalCtx::new(&env);
        let n = self.dim();
        let m = self.m();

        let mut cframe = DMatrix::<C64>::zeros(n, n);
        for (i, row) in self.rows().iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                cframe[(i, j)] = ev.eval(e)?;
            }
        }
        let frame = cframe
            .clone()
            .try_inverse()
            .ok_or_else(|| RobinsonError::Numeric("coframe matrix is singular".into()))?;
        let cond = one_norm(&cframe) * one_norm(&frame);
        if !cond.is_finite() || cond > COND_LIMIT {
            return Err(RobinsonError::IllConditioned {
                cond,
                limit: COND_LIMIT,
            });
        }

        let mut g = DMatrix::<C64>::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                g[(a, b)] = ev.eval(&self.metric()[a][b])?;
            }
        }
        check_lorentzian(&g)?;
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| RobinsonError::Numeric("metric is singular at a sample".into()))?;

        let mut h = DMatrix::<C64>::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                h[(a, b)] = ev.eval(&self.h()[a][b])?;
            }
        }
        // hinv[a][b] is the inverse Hermitian metric paired so that
        // sum_b hinv[a][b] h[c][b] = delta_ac.
        let hinv = h
            .transpose()
            .try_inverse()
            .ok_or_else(|| RobinsonError::Numeric("screen metric is singular".into()))?;

        let mut dg = vec![C64::new(0.0, 0.0); n * n * n];
        for mu in 0..n {
            for a in 0..n {
                for b in a..n {
                    let v = ev.eval(&self.metric_derivative()[mu][a][b])?;
                    dg[(mu * n + a) * n + b] = v;
                    dg[(mu * n + b) * n + a] = v;
                }
            }
        }
        let mut dkappa = vec![C64::new(0.0, 0.0); n * n];
        for mu in 0..n {
            for nu in 0..n {
                dkappa[mu * n + nu] = ev.eval(&self.kappa_derivative()[mu][nu])?;
            }
        }

        let mut gamma = vec![C64::new(0.0, 0.0); n * n * n];
        for s in 0..n {
            for mu in 0..n {
                for nu in mu..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for r in 0..n {
                        acc += ginv[(s, r)]
                            * (dg[(mu * n + nu) * n + r] + dg[(nu * n + mu) * n + r]
                                - dg[(r * n + mu) * n + nu]);
                    }
                    let v = 0.5 * acc;
                    gamma[(s * n + mu) * n + nu] = v;
                    gamma[(s * n + nu) * n + mu] = v;
                }
            }
        }

        let kappa_vals: Vec<C64> = (0..n).map(|j| cframe[(0, j)]).collect();
        let mut nk = DMatrix::<C64>::zeros(n, n);
        for mu in 0..n {
            for nu in 0..n {
                let mut v = dkappa[mu * n + nu];
                for s in 0..n {
                    v -= gamma[(s * n + mu) * n + nu] * kappa_vals[s];
                }
                nk[(mu, nu)] = v;
            }
        }

        let mut rho_t = Vec::with_capacity(self.triples().len());
        for e in self.rho_triples() {
            rho_t.push(ev.eval(e)?);
        }
        let mut drho_t = vec![vec![C64::new(0.0, 0.0); rho_t.len()]; n];
        for mu in 0..n {
            for (t, e) in self.rho_derivative()[mu].iter().enumerate() {
                drho_t[mu][t] = ev.eval(e)?;
            }
        }

        let tix = |a: usize, b: usize, c: usize, vals: &[C64]| -> C64 {
            match self.triple_slot(a, b, c) {
                Some((slot, sign)) => sign * vals[slot],
                None => C64::new(0.0, 0.0),
            }
        };

        let mut rho = vec![C64::new(0.0, 0.0); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    rho[(a * n + b) * n + c] = tix(a, b, c, &rho_t);
                }
            }
        }

        let mut nr = vec![C64::new(0.0, 0.0); n * n * n * n];
        for mu in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut v = tix(a, b, c, &drho_t[mu]);
                        for s in 0..n {
                            v -= gamma[(s * n + mu) * n + a] * rho[(s * n + b) * n + c];
                            v -= gamma[(s * n + mu) * n + b] * rho[(a * n + s) * n + c];
                            v -= gamma[(s * n + mu) * n + c] * rho[(a * n + b) * n + s];
                        }
                        nr[((mu * n + a) * n + b) * n + c] = v;
                    }
                }
            }
        }

        Ok(PointData {
            m,
            n,
            cond,
            cframe,
            frame,
            g,
            ginv,
            h,
            hinv,
            dkappa,
            gamma,
            nk,
            rho,
            nr,
        })
    }
}

impl PointData {
    pub fn kappa(&self) -> Vec<C64> {
        (0..self.n).map(|j| self.cframe[(0, j)]).collect()
    }

    pub fn lambda(&self) -> Vec<C64> {
        (0..self.n).map(|j| self.cframe[(self.n - 1, j)]).collect()
    }

    pub fn legs(&self) -> Legs {
        let col = |j: usize| -> Vec<C64> { (0..self.n).map(|i| self.frame[(i, j)]).collect() };
        Legs {
            ell: col(0),
            e: (0..self.m).map(|a| col(1 + a)).collect(),
            ebar: (0..self.m).map(|a| col(1 + self.m + a)).collect(),
            k: col(self.n - 1),
        }
    }

    pub fn nk_at(&self, x: &[C64], y: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..self.n {
            if x[a].norm_sqr() == 0.0 {
                continue;
            }
            for b in 0..self.n {
                acc += x[a] * y[b] * self.nk[(a, b)];
            }
        }
        acc
    }

    pub fn rho_at(&self, a: usize, b: usize, c: usize) -> C64 {
        self.rho[(a * self.n + b) * self.n + c]
    }

    pub fn nr_at(&self, mu: usize, a: usize, b: usize, c: usize) -> C64 {
        self.nr[((mu * self.n + a) * self.n + b) * self.n + c]
    }

    pub fn christoffel(&self, s: usize, mu: usize, nu: usize) -> C64 {
        self.gamma[(s * self.n + mu) * self.n + nu]
    }
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let mut s = 0.0;
        for i in 0..m.nrows() {
            s += m[(i, j)].norm();
        }
        best = best.max(s);
    }
    best
}

/// The metric must be real symmetric with mostly-plus Lorentzian signature.
fn check_lorentzian(g: &DMatrix<C64>) -> Result<()> {
    let n = g.nrows();
    let scale = g.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let mut re = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = g[(i, j)];
            if v.im.abs() > 1e-9 * (1.0 + scale) {
                return Err(RobinsonError::Validation(format!(
                    "metric entry ({i},{j}) has imaginary part {:.3e}",
                    v.im
                )));
            }
            re[(i, j)] = v.re;
        }
    }
    let sym = 0.5 * (&re + re.transpose());
    let eig = sym.symmetric_eigen();
    let negative = eig.eigenvalues.iter().filter(|&&ev| ev < 0.0).count();
    let null = eig
        .eigenvalues
        .iter()
        .filter(|&&ev| ev.abs() <= 1e-12 * (1.0 + scale))
        .count();
    if null > 0 {
        return Err(RobinsonError::Numeric(
            "metric is degenerate at a sample".into(),
        ));
    }
    if negative != 1 {
        return Err(RobinsonError::Signature {
            negative,
            dim: n,
        });
    }
    Ok(())
}
