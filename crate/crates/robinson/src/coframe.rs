use fieldexpr::{Chart, Expr};

use crate::error::{Result, RobinsonError};

/// A Lorentzian metric presented through a null coframe adapted to an almost
/// Robinson structure: a real null form `kappa`, complex screen forms
/// `theta^1..theta^m`, a real null form `lambda`, and a Hermitian screen
/// metric `h`. The metric is
///
///   g = kappa (x) lambda + lambda (x) kappa
///     + h_ab ( theta^a (x) conj(theta^b) + conj(theta^b) (x) theta^a ).
///
/// All coordinate derivatives used downstream (metric, structure three-form)
/// are differentiated symbolically once, here; numeric work happens per
/// sample in [`crate::frame`].
pub struct CoframeField {
    chart: Chart,
    m: usize,
    kappa: Vec<Expr>,
    theta: Vec<Vec<Expr>>,
    lambda: Vec<Expr>,
    h: Vec<Vec<Expr>>,

    rows: Vec<Vec<Expr>>,
    g: Vec<Vec<Expr>>,
    dg: Vec<Vec<Vec<Expr>>>,
    dkappa: Vec<Vec<Expr>>,
    triples: Vec<(usize, usize, usize)>,
    triple_index: Vec<usize>,
    rho: Vec<Expr>,
    drho: Vec<Vec<Expr>>,
}

impl CoframeField {
    /// Coframe with the identity screen metric.
    pub fn unitary(
        chart: Chart,
        m: usize,
        kappa: Vec<Expr>,
        theta: Vec<Vec<Expr>>,
        lambda: Vec<Expr>,
    ) -> Result<CoframeField> {
        let h = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| if a == b { Expr::one() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        CoframeField::new(chart, m, kappa, theta, lambda, h)
    }

    pub fn new(
        chart: Chart,
        m: usize,
        kappa: Vec<Expr>,
        theta: Vec<Vec<Expr>>,
        lambda: Vec<Expr>,
        h: Vec<Vec<Expr>>,
    ) -> Result<CoframeField> {
        let n = chart.dim();
        if m == 0 || n != 2 * m + 2 {
            return Err(RobinsonError::Validation(format!(
                "chart dimension {n} does not match 2m+2 for m = {m}"
            )));
        }
        for (label, row) in [("kappa", &kappa), ("lambda", &lambda)] {
            if row.len() != n {
                return Err(RobinsonError::Validation(format!(
                    "{label} must have {n} coordinate components, got {}",
                    row.len()
                )));
            }
        }
        if theta.len() != m || theta.iter().any(|t| t.len() != n) {
            return Err(RobinsonError::Validation(format!(
                "theta must be {m} forms with {n} components each"
            )));
        }
        if h.len() != m || h.iter().any(|r| r.len() != m) {
            return Err(RobinsonError::Validation(format!(
                "h must be a {m}x{m} matrix of expressions"
            )));
        }

        // Coframe rows: kappa, theta^a, conj(theta^a), lambda. Coordinates
        // are real, so conjugate rows are literal conjugates.
        let mut rows: Vec<Vec<Expr>> = Vec::with_capacity(n);
        rows.push(kappa.clone());
        for t in &theta {
            rows.push(t.clone());
        }
        for t in &theta {
            rows.push(t.iter().map(|e| Expr::conj(e.clone())).collect());
        }
        rows.push(lambda.clone());

        let theta_bar: Vec<&Vec<Expr>> = rows[1 + m..1 + 2 * m].iter().collect();

        let mut g = vec![vec![Expr::zero(); n]; n];
        for a in 0..n {
            for b in a..n {
                let mut terms = vec![
                    Expr::mul(kappa[a].clone(), lambda[b].clone()),
                    Expr::mul(kappa[b].clone(), lambda[a].clone()),
                ];
                for al in 0..m {
                    for be in 0..m {
                        let hab = h[al][be].clone();
                        terms.push(Expr::prod(vec![
                            hab.clone(),
                            theta[al][a].clone(),
                            theta_bar[be][b].clone(),
                        ]));
                        terms.push(Expr::prod(vec![
                            hab,
                            theta[al][b].clone(),
                            theta_bar[be][a].clone(),
                        ]));
                    }
                }
                let e = Expr::sum(terms);
                g[a][b] = e.clone();
                g[b][a] = e;
            }
        }

        // omega_ab = i h_ab ( theta^a_a' conj(theta^b)_b' - ... ), needed for
        // the structure three-form rho = 3 kappa ^ omega.
        let mut omega = vec![vec![Expr::zero(); n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let mut terms = Vec::new();
                for al in 0..m {
                    for be in 0..m {
                        let hab = h[al][be].clone();
                        terms.push(Expr::prod(vec![
                            hab.clone(),
                            theta[al][a].clone(),
                            theta_bar[be][b].clone(),
                        ]));
                        terms.push(Expr::neg(Expr::prod(vec![
                            hab,
                            theta[al][b].clone(),
                            theta_bar[be][a].clone(),
                        ])));
                    }
                }
                let e = Expr::mul(Expr::i(), Expr::sum(terms));
                omega[a][b] = e.clone();
                omega[b][a] = Expr::neg(e);
            }
        }

        let mut triples = Vec::new();
        let mut triple_index = vec![usize::MAX; n * n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    triple_index[(a * n + b) * n + c] = triples.len();
                    triples.push((a, b, c));
                }
            }
        }

        let rho: Vec<Expr> = triples
            .iter()
            .map(|&(a, b, c)| {
                Expr::sum(vec![
                    Expr::mul(kappa[a].clone(), omega[b][c].clone()),
                    Expr::neg(Expr::mul(kappa[b].clone(), omega[a][c].clone())),
                    Expr::mul(kappa[c].clone(), omega[a][b].clone()),
                ])
            })
            .collect();

        // One differentiation context so shared subexpressions are
        // differentiated once across the whole coframe.
        let mut dc = chart.diff_ctx();
        let mut dg = vec![vec![vec![Expr::zero(); n]; n]; n];
        let mut dkappa = vec![vec![Expr::zero(); n]; n];
        let mut drho = vec![vec![Expr::zero(); triples.len()]; n];
        for mu in 0..n {
            for a in 0..n {
                dkappa[mu][a] = dc.diff(&kappa[a], mu as u32);
                for b in a..n {
                    let e = dc.diff(&g[a][b], mu as u32);
                    dg[mu][a][b] = e.clone();
                    dg[mu][b][a] = e;
                }
            }
            for (t, r) in rho.iter().enumerate() {
                drho[mu][t] = dc.diff(r, mu as u32);
            }
        }
        drop(dc);

        Ok(CoframeField {
            chart,
            m,
            kappa,
            theta,
            lambda,
            h,
            rows,
            g,
            dg,
            dkappa,
            triples,
            triple_index,
            rho,
            drho,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m + 2
    }

    pub fn kappa(&self) -> &[Expr] {
        &self.kappa
    }

    pub fn theta(&self) -> &[Vec<Expr>] {
        &self.theta
    }

    pub fn lambda(&self) -> &[Expr] {
        &self.lambda
    }

    pub fn h(&self) -> &[Vec<Expr>] {
        &self.h
    }

    /// Coframe matrix rows in the order kappa, theta, conj(theta), lambda.
    pub(crate) fn rows(&self) -> &[Vec<Expr>] {
        &self.rows
    }

    pub(crate) fn metric(&self) -> &[Vec<Expr>] {
        &self.g
    }

    pub(crate) fn metric_derivative(&self) -> &[Vec<Vec<Expr>>] {
        &self.dg
    }

    pub(crate) fn kappa_derivative(&self) -> &[Vec<Expr>] {
        &self.dkappa
    }

    pub(crate) fn triples(&self) -> &[(usize, usize, usize)] {
        &self.triples
    }

    /// Sorted-triple slot and permutation sign for (a, b, c); `None` on a
    /// repeated index.
    pub(crate) fn triple_slot(&self, a: usize, b: usize, c: usize) -> Option<(usize, f64)> {
        if a == b || b == c || a == c {
            return None;
        }
        let mut idx = [a, b, c];
        let mut sign = 1.0;
        // Three-element sort, tracking parity.
        if idx[0] > idx[1] {
            idx.swap(0, 1);
            sign = -sign;
        }
        if idx[1] > idx[2] {
            idx.swap(1, 2);
            sign = -sign;
        }
        if idx[0] > idx[1] {
            idx.swap(0, 1);
            sign = -sign;
        }
        let n = self.dim();
        let slot = self.triple_index[(idx[0] * n + idx[1]) * n + idx[2]];
        Some((slot, sign))
    }

    pub(crate) fn rho_triples(&self) -> &[Expr] {
        &self.rho
    }

    pub(crate) fn rho_derivative(&self) -> &[Vec<Expr>] {
        &self.drho
    }
}

/// A one-form with precomputed coordinate derivatives, for deformations and
/// conformal scale gradients.
pub struct CovectorField {
    comps: Vec<Expr>,
    d: Vec<Vec<Expr>>,
}

impl CovectorField {
    pub fn new(chart: &Chart, comps: Vec<Expr>) -> Result<CovectorField> {
        let n = chart.dim();
        if comps.len() != n {
            return Err(RobinsonError::Validation(format!(
                "one-form must have {n} components, got {}",
                comps.len()
            )));
        }
        let mut dc = chart.diff_ctx();
        let d = (0..n)
            .map(|mu| {
                comps
                    .iter()
                    .map(|c| dc.diff(c, mu as u32))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(CovectorField { comps, d })
    }

    /// The gradient of a scalar, as a one-form.
    pub fn gradient(chart: &Chart, scalar: &Expr) -> Result<CovectorField> {
        let mut dc = chart.diff_ctx();
        let comps = (0..chart.dim())
            .map(|mu| dc.diff(scalar, mu as u32))
            .collect();
        drop(dc);
        CovectorField::new(chart, comps)
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn partials(&self) -> &[Vec<Expr>] {
        &self.d
    }
}
