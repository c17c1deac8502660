use fieldexpr::C64;
use nalgebra::DMatrix;

use crate::frame::{Legs, PointData};

/// The intrinsic torsion of the almost Robinson structure at one point,
/// decomposed into its irreducible screen-space pieces.
///
/// First-order pieces come from the covariant derivative of kappa projected
/// on the frame: gamma (nongeodesity), eps (expansion), tau_w (twist
/// scalar), tau_h / tau0 (Hermitian twist and its trace-free part), sigma_h
/// (trace-free Hermitian shear), tau_s / sigma_s (skew and symmetric parts
/// of the holomorphic screen block), and e_vec. The remaining pieces come
/// from the covariant derivative of the structure three-form: zeta, b_mat,
/// the cubic blocks g_full / gb_full with their skew (g_skew), hook
/// (g_hook), trace (g_trace) and trace-free (g0) parts.
#[derive(Clone, Debug)]
pub struct Components {
    pub m: usize,
    pub gamma: Vec<C64>,
    pub gamma_bar: Vec<C64>,
    pub e_vec: Vec<C64>,
    pub eps: C64,
    pub tau_w: C64,
    pub tau_h: Vec<Vec<C64>>,
    pub tau0: Vec<Vec<C64>>,
    pub sigma_h: Vec<Vec<C64>>,
    pub tau_s: Vec<Vec<C64>>,
    pub sigma_s: Vec<Vec<C64>>,
    pub zeta: Vec<Vec<C64>>,
    pub b_mat: Vec<Vec<C64>>,
    pub g_full: Vec<Vec<Vec<C64>>>,
    pub gb_full: Vec<Vec<Vec<C64>>>,
    pub g_skew: Vec<Vec<Vec<C64>>>,
    pub g_hook: Vec<Vec<Vec<C64>>>,
    pub g_trace: Vec<C64>,
    pub g0: Vec<Vec<Vec<C64>>>,
    /// Raw screen blocks of (nabla kappa): t_blk = (e, ebar), tb_blk =
    /// (ebar, e), s_blk = (e, e). Kept for the transformation routes.
    pub t_blk: Vec<Vec<C64>>,
    pub tb_blk: Vec<Vec<C64>>,
    pub s_blk: Vec<Vec<C64>>,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn mat(m: usize) -> Vec<Vec<C64>> {
    vec![vec![zero(); m]; m]
}

fn ten(m: usize) -> Vec<Vec<Vec<C64>>> {
    vec![vec![vec![zero(); m]; m]; m]
}

/// Extraction using the point's own legs and screen metric.
pub fn extract(pd: &PointData) -> Components {
    extract_with(pd, &pd.legs(), &pd.h, &pd.hinv)
}

/// Extraction of components from the covariant derivatives in `src`,
/// projected with explicitly supplied legs and screen metric. Keeping the
/// two separate lets deformed derivatives be contracted against undeformed
/// frames when cross-checking transformation laws.
pub fn extract_with(
    src: &PointData,
    legs: &Legs,
    h: &DMatrix<C64>,
    hinv: &DMatrix<C64>,
) -> Components {
    let m = src.m;
    let n = src.n;
    let im = C64::new(0.0, 1.0);

    let nk2 = |x: &[C64], y: &[C64]| src.nk_at(x, y);

    // All cubic projections carried an ell in the last slot, so contract it
    // once.
    let mut nr_l = vec![zero(); n * n * n];
    for mu in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut acc = zero();
                for c in 0..n {
                    acc += src.nr_at(mu, a, b, c) * legs.ell[c];
                }
                nr_l[(mu * n + a) * n + b] = acc;
            }
        }
    }
    let nr4l = |x: &[C64], a: &[C64], b: &[C64]| -> C64 {
        let mut acc = zero();
        for mu in 0..n {
            if x[mu].norm_sqr() == 0.0 {
                continue;
            }
            let mut inner = zero();
            for p in 0..n {
                if a[p].norm_sqr() == 0.0 {
                    continue;
                }
                for q in 0..n {
                    inner += a[p] * b[q] * nr_l[(mu * n + p) * n + q];
                }
            }
            acc += x[mu] * inner;
        }
        acc
    };

    let gamma: Vec<C64> = (0..m).map(|a| nk2(&legs.k, &legs.e[a])).collect();
    let gamma_bar: Vec<C64> = (0..m).map(|a| nk2(&legs.k, &legs.ebar[a])).collect();
    let e_vec: Vec<C64> = (0..m).map(|a| nk2(&legs.ell, &legs.e[a])).collect();

    let mut t_blk = mat(m);
    let mut tb_blk = mat(m);
    let mut s_blk = mat(m);
    for a in 0..m {
        for b in 0..m {
            t_blk[a][b] = nk2(&legs.e[a], &legs.ebar[b]);
            tb_blk[a][b] = nk2(&legs.ebar[a], &legs.e[b]);
            s_blk[a][b] = nk2(&legs.e[a], &legs.e[b]);
        }
    }

    let mut eps = zero();
    for a in 0..m {
        for b in 0..m {
            eps += hinv[(a, b)] * t_blk[a][b] + hinv[(a, b)].conj() * tb_blk[a][b];
        }
    }

    let mut tau_h = mat(m);
    for a in 0..m {
        for b in 0..m {
            tau_h[a][b] = 0.5 * (t_blk[a][b] - tb_blk[b][a]);
        }
    }
    let mut tau_w = zero();
    for a in 0..m {
        for b in 0..m {
            tau_w += hinv[(a, b)] * tau_h[a][b];
        }
    }
    tau_w *= -2.0 * im;

    let mm = m as f64;
    let mut tau0 = mat(m);
    let mut sigma_h = mat(m);
    for a in 0..m {
        for b in 0..m {
            tau0[a][b] = tau_h[a][b] - (im / (2.0 * mm)) * tau_w * h[(a, b)];
            sigma_h[a][b] =
                0.5 * (t_blk[a][b] + tb_blk[b][a]) - (eps / (2.0 * mm)) * h[(a, b)];
        }
    }

    let mut tau_s = mat(m);
    let mut sigma_s = mat(m);
    for a in 0..m {
        for b in 0..m {
            tau_s[a][b] = 0.5 * (s_blk[a][b] - s_blk[b][a]);
            sigma_s[a][b] = 0.5 * (s_blk[a][b] + s_blk[b][a]);
        }
    }

    let mut zeta = mat(m);
    let mut b_mat = mat(m);
    for a in 0..m {
        for b in 0..m {
            zeta[a][b] = nr4l(&legs.k, &legs.e[a], &legs.e[b]);
            b_mat[a][b] = nr4l(&legs.ell, &legs.e[a], &legs.e[b]);
        }
    }

    let mut g_full = ten(m);
    let mut gb_full = ten(m);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                g_full[a][b][c] = nr4l(&legs.e[a], &legs.e[b], &legs.e[c]);
                gb_full[a][b][c] = nr4l(&legs.ebar[a], &legs.e[b], &legs.e[c]);
            }
        }
    }

    let mut g_skew = ten(m);
    let mut g_hook = ten(m);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                g_skew[a][b][c] = (g_full[a][b][c] - g_full[a][c][b] + g_full[b][c][a]
                    - g_full[b][a][c]
                    + g_full[c][a][b]
                    - g_full[c][b][a])
                    / 6.0;
                g_hook[a][b][c] = ((g_full[a][b][c] + g_full[b][a][c])
                    - (g_full[a][c][b] + g_full[c][a][b]))
                    / 3.0;
            }
        }
    }

    let mut g_trace = vec![zero(); m];
    for a in 0..m {
        let mut acc = zero();
        for b in 0..m {
            for c in 0..m {
                acc += hinv[(b, c)] * gb_full[c][b][a];
            }
        }
        g_trace[a] = acc;
    }

    let mut g0 = ten(m);
    if m >= 2 {
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    g0[a][b][c] = gb_full[a][b][c]
                        + (g_trace[b] * h[(c, a)] - g_trace[c] * h[(b, a)]) / (mm - 1.0);
                }
            }
        }
    }

    Components {
        m,
        gamma,
        gamma_bar,
        e_vec,
        eps,
        tau_w,
        tau_h,
        tau0,
        sigma_h,
        tau_s,
        sigma_s,
        zeta,
        b_mat,
        g_full,
        gb_full,
        g_skew,
        g_hook,
        g_trace,
        g0,
        t_blk,
        tb_blk,
        s_blk,
    }
}

/// Names of the irreducible components as they appear in reports and class
/// conditions, in a fixed presentation order.
pub const COMPONENT_NAMES: [&str; 14] = [
    "gamma", "epsilon", "tau_omega", "tau", "tau0", "sigma_h", "sigma_s", "zeta", "E", "G",
    "G_skew", "G_hook", "G0", "B",
];

impl Components {
    /// All-zero component set; transformation laws build predictions on
    /// top of this.
    pub fn blank(m: usize) -> Self {
        Components {
            m,
            gamma: vec![zero(); m],
            gamma_bar: vec![zero(); m],
            e_vec: vec![zero(); m],
            eps: zero(),
            tau_w: zero(),
            tau_h: mat(m),
            tau0: mat(m),
            sigma_h: mat(m),
            tau_s: mat(m),
            sigma_s: mat(m),
            zeta: mat(m),
            b_mat: mat(m),
            g_full: ten(m),
            gb_full: ten(m),
            g_skew: ten(m),
            g_hook: ten(m),
            g_trace: vec![zero(); m],
            g0: ten(m),
            t_blk: mat(m),
            tb_blk: mat(m),
            s_blk: mat(m),
        }
    }

    /// Flattened entries of one named component.
    pub fn entries(&self, name: &str) -> Vec<C64> {
        let flat2 = |m: &Vec<Vec<C64>>| m.iter().flatten().copied().collect::<Vec<_>>();
        let flat3 = |t: &Vec<Vec<Vec<C64>>>| {
            t.iter()
                .flatten()
                .flatten()
                .copied()
                .collect::<Vec<_>>()
        };
        match name {
            "gamma" => {
                let mut v = self.gamma.clone();
                v.extend_from_slice(&self.gamma_bar);
                v
            }
            "epsilon" => vec![self.eps],
            "tau_omega" => vec![self.tau_w],
            "tau" => flat2(&self.tau_s),
            "tau0" => flat2(&self.tau0),
            "sigma_h" => flat2(&self.sigma_h),
            "sigma_s" => flat2(&self.sigma_s),
            "zeta" => flat2(&self.zeta),
            "E" => self.e_vec.clone(),
            "G" => self.g_trace.clone(),
            "G_skew" => flat3(&self.g_skew),
            "G_hook" => flat3(&self.g_hook),
            "G0" => flat3(&self.g0),
            "B" => flat2(&self.b_mat),
            other => panic!("unknown component `{other}`"),
        }
    }

    /// Local magnitude of the torsion at this point: the largest entry over
    /// every component. Zero tests are taken relative to this scale.
    pub fn scale(&self) -> f64 {
        COMPONENT_NAMES
            .iter()
            .flat_map(|name| self.entries(name))
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// zeta + c * i * tau, the combinations the submodule conditions use.
    pub fn zeta_plus_c_itau(&self, c: f64) -> Vec<C64> {
        let im = C64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(self.m * self.m);
        for a in 0..self.m {
            for b in 0..self.m {
                out.push(self.zeta[a][b] + c * im * self.tau_s[a][b]);
            }
        }
        out
    }

    /// 2(m-1) i E - G.
    pub fn e_g_combo(&self) -> Vec<C64> {
        let im = C64::new(0.0, 1.0);
        let c = 2.0 * (self.m as f64 - 1.0);
        (0..self.m)
            .map(|a| c * im * self.e_vec[a] - self.g_trace[a])
            .collect()
    }

    /// Screen twist matrix over the complex frame (e_a, ebar_a); its rank
    /// equals the rank of the real twist two-form on the screen.
    pub fn twist_matrix(&self) -> Vec<Vec<C64>> {
        let m = self.m;
        let mut w = vec![vec![zero(); 2 * m]; 2 * m];
        for a in 0..m {
            for b in 0..m {
                w[a][b] = self.tau_s[a][b];
                w[a][m + b] = self.tau_h[a][b];
                w[m + a][b] = -self.tau_h[b][a];
                w[m + a][m + b] = self.tau_s[a][b].conj();
            }
        }
        w
    }
}

/// Rank of a complex matrix by Gaussian elimination with partial pivoting;
/// pivots below `tol` times the largest entry count as zero.
pub fn complex_rank(mat: &[Vec<C64>], tol: f64) -> usize {
    let rows = mat.len();
    if rows == 0 {
        return 0;
    }
    let cols = mat[0].len();
    let mut a: Vec<Vec<C64>> = mat.to_vec();
    let scale = a
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let cut = tol * scale;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let mut best = row;
        for r in (row + 1)..rows {
            if a[r][col].norm() > a[best][col].norm() {
                best = r;
            }
        }
        if row >= rows || a[best][col].norm() <= cut {
            continue;
        }
        a.swap(row, best);
        for r in (row + 1)..rows {
            let f = a[r][col] / a[row][col];
            for c2 in col..cols {
                let v = a[row][c2];
                a[r][c2] -= f * v;
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}
