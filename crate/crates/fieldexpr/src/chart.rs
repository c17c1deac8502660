use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ExprError, Result};
use crate::expr::{format_expr, C64, DiffCtx, EvalCtx, Expr, Func};
use crate::parser::parse_expr;

const GUARD_TOL: f64 = 1e-6;
const SAMPLE_ATTEMPTS: usize = 200;

#[derive(Debug, Clone)]
pub struct CoordSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// A coordinate chart: ordered coordinates with sampling ranges, real
/// parameters, named intermediate definitions, and guard expressions that
/// must stay positive at every sample.
///
/// The chart owns the symbol table; variable indices in expressions index
/// the environment laid out as coordinates, then parameters, then
/// definitions.
#[derive(Debug)]
pub struct Chart {
    coords: Vec<CoordSpec>,
    params: Vec<ParamSpec>,
    defs: Vec<(String, Expr)>,
    guards: Vec<(String, Expr)>,
    names: Vec<String>,
}

pub struct ChartBuilder {
    chart: Chart,
}

impl Chart {
    pub fn builder() -> ChartBuilder {
        ChartBuilder {
            chart: Chart {
                coords: Vec::new(),
                params: Vec::new(),
                defs: Vec::new(),
                guards: Vec::new(),
                names: Vec::new(),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[CoordSpec] {
        &self.coords
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn defs(&self) -> &[(String, Expr)] {
        &self.defs
    }

    pub fn guards(&self) -> &[(String, Expr)] {
        &self.guards
    }

    fn index_of(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    /// Expression referring to a declared symbol.
    pub fn sym(&self, name: &str) -> Option<Expr> {
        self.index_of(name).map(Expr::var)
    }

    pub fn parse(&self, src: &str) -> Result<Expr> {
        parse_expr(src, &|name| self.index_of(name))
    }

    pub fn print(&self, e: &Expr) -> String {
        let mut s = String::new();
        format_expr(e, &self.names, &mut s);
        s
    }

    pub fn diff_ctx(&self) -> DiffCtx<'_> {
        DiffCtx::new(&self.defs, self.coords.len(), self.params.len())
    }

    pub fn diff(&self, e: &Expr, coord: usize) -> Expr {
        self.diff_ctx().diff(e, coord as u32)
    }

    /// Full evaluation environment at a sample: coordinates, parameters,
    /// then definitions evaluated in declaration order.
    pub fn env_for(&self, p: &PointSample) -> Result<Vec<C64>> {
        if p.coords.len() != self.coords.len() || p.params.len() != self.params.len() {
            return Err(ExprError::EnvMismatch(
                (p.coords.len() + p.params.len()) as u32,
            ));
        }
        let mut env: Vec<C64> = Vec::with_capacity(self.names.len());
        env.extend(p.coords.iter().map(|v| C64::new(*v, 0.0)));
        env.extend(p.params.iter().map(|v| C64::new(*v, 0.0)));
        for (_, body) in &self.defs {
            let v = EvalCtx::new(&env).eval(body)?;
            env.push(v);
        }
        Ok(env)
    }

    pub fn eval(&self, e: &Expr, p: &PointSample) -> Result<C64> {
        let env = self.env_for(p)?;
        EvalCtx::new(&env).eval(e)
    }

    fn guards_hold(&self, env: &[C64]) -> Result<std::result::Result<(), String>> {
        for (name, g) in &self.guards {
            let v = match EvalCtx::new(env).eval(g) {
                Ok(v) => v,
                Err(ExprError::DivisionNearZero) | Err(ExprError::Domain(_)) => {
                    return Ok(Err(name.clone()))
                }
                Err(e) => return Err(e),
            };
            if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) || v.re <= GUARD_TOL {
                return Ok(Err(name.clone()));
            }
        }
        Ok(Ok(()))
    }

    /// Draws `count` samples with coordinates and parameters uniform over
    /// their ranges, retrying each point until every guard evaluates to a
    /// real value above the guard tolerance.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<PointSample>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for index in 0..count {
            let mut last_guard = String::new();
            let mut accepted = None;
            for _ in 0..SAMPLE_ATTEMPTS {
                let coords: Vec<f64> = self.coords.iter().map(|c| draw(&mut rng, c.min, c.max)).collect();
                let params: Vec<f64> = self.params.iter().map(|p| draw(&mut rng, p.min, p.max)).collect();
                let cand = PointSample {
                    coords,
                    params,
                    seed,
                    index: index as u32,
                };
                let env = match self.env_for(&cand) {
                    Ok(env) => env,
                    Err(ExprError::DivisionNearZero) | Err(ExprError::Domain(_)) => {
                        last_guard = "<definition domain>".to_string();
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                match self.guards_hold(&env)? {
                    Ok(()) => {
                        accepted = Some(cand);
                        break;
                    }
                    Err(g) => last_guard = g,
                }
            }
            match accepted {
                Some(p) => out.push(p),
                None => {
                    return Err(ExprError::AllSamplesRejected {
                        attempts: SAMPLE_ATTEMPTS,
                        guard: last_guard,
                    })
                }
            }
        }
        Ok(out)
    }

    /// Probabilistic zero test: true iff `|e| / (1 + scale)` stays below
    /// `tol` at every sample, with the field's own maximum as the scale.
    pub fn is_zero_field(
        &self,
        e: &Expr,
        samples: &[PointSample],
        tol: f64,
    ) -> Result<ZeroVerdict> {
        if samples.len() < 4 {
            return Err(ExprError::TooFewSamples {
                need: 4,
                got: samples.len(),
            });
        }
        let mut vals = Vec::with_capacity(samples.len());
        for p in samples {
            vals.push(self.eval(e, p)?.norm());
        }
        let scale = vals.iter().cloned().fold(0.0f64, f64::max);
        Ok(zero_verdict(
            &vals.iter().map(|v| (*v, scale)).collect::<Vec<_>>(),
            tol,
        ))
    }
}

fn draw<R: Rng>(rng: &mut R, min: f64, max: f64) -> f64 {
    if min == max {
        min
    } else {
        rng.gen_range(min..max)
    }
}

impl ChartBuilder {
    fn declare(&mut self, name: &str) -> Result<()> {
        let ok_chars = name
            .chars()
            .enumerate()
            .all(|(k, c)| c == '_' || c.is_ascii_alphanumeric() && (k > 0 || !c.is_ascii_digit()));
        if name.is_empty() || !ok_chars || name == "i" || name == "pi" {
            return Err(ExprError::BadSymbol(name.to_string()));
        }
        if Func::from_name(name).is_some() || self.chart.names.iter().any(|n| n == name) {
            return Err(ExprError::BadSymbol(name.to_string()));
        }
        self.chart.names.push(name.to_string());
        Ok(())
    }

    /// Coordinate with the default sampling range [-1, 1].
    pub fn coord(&mut self, name: &str) -> Result<&mut Self> {
        self.coord_range(name, -1.0, 1.0)
    }

    pub fn coord_range(&mut self, name: &str, min: f64, max: f64) -> Result<&mut Self> {
        if !self.chart.params.is_empty() || !self.chart.defs.is_empty() {
            return Err(ExprError::BadSymbol(format!(
                "coordinate `{name}` declared after parameters or definitions"
            )));
        }
        check_range(name, min, max)?;
        self.declare(name)?;
        self.chart.coords.push(CoordSpec {
            name: name.to_string(),
            min,
            max,
        });
        Ok(self)
    }

    pub fn param(&mut self, name: &str, min: f64, max: f64) -> Result<&mut Self> {
        if !self.chart.defs.is_empty() {
            return Err(ExprError::BadSymbol(format!(
                "parameter `{name}` declared after definitions"
            )));
        }
        check_range(name, min, max)?;
        self.declare(name)?;
        self.chart.params.push(ParamSpec {
            name: name.to_string(),
            min,
            max,
        });
        Ok(self)
    }

    /// Named definition; the body may reference coordinates, parameters and
    /// earlier definitions.
    pub fn def(&mut self, name: &str, body: &str) -> Result<&mut Self> {
        let e = self.chart.parse(body)?;
        self.declare(name)?;
        self.chart.defs.push((name.to_string(), e));
        Ok(self)
    }

    /// Definition from an already-built expression.
    pub fn def_expr(&mut self, name: &str, body: Expr) -> Result<&mut Self> {
        self.declare(name)?;
        self.chart.defs.push((name.to_string(), body));
        Ok(self)
    }

    /// Guard: sampling keeps only points where this evaluates to a real
    /// value above the guard tolerance.
    pub fn guard(&mut self, src: &str) -> Result<&mut Self> {
        let e = self.chart.parse(src)?;
        self.chart.guards.push((src.to_string(), e));
        Ok(self)
    }

    pub fn build(self) -> Result<Chart> {
        let n = self.chart.coords.len();
        if n < 4 || n % 2 != 0 {
            return Err(ExprError::BadDimension(n));
        }
        Ok(self.chart)
    }
}

fn check_range(name: &str, min: f64, max: f64) -> Result<()> {
    if !min.is_finite() || !max.is_finite() || min > max {
        return Err(ExprError::BadRange {
            name: name.to_string(),
            min,
            max,
        });
    }
    Ok(())
}

/// One evaluation point: coordinate and parameter values plus the seed and
/// index that produced them.
#[derive(Debug, Clone)]
pub struct PointSample {
    pub coords: Vec<f64>,
    pub params: Vec<f64>,
    pub seed: u64,
    pub index: u32,
}

#[derive(Debug, Clone)]
pub struct ZeroVerdict {
    pub is_zero: bool,
    /// Sample index and magnitude of the largest violation when nonzero.
    pub witness: Option<(usize, f64)>,
    /// Number of samples exceeding tolerance.
    pub above: usize,
}

/// Scale-relative zero test over per-sample (magnitude, scale) pairs.
pub fn zero_verdict(vals: &[(f64, f64)], tol: f64) -> ZeroVerdict {
    let mut above = 0usize;
    let mut witness: Option<(usize, f64)> = None;
    for (k, (v, scale)) in vals.iter().enumerate() {
        let rel = v / (1.0 + scale);
        if rel >= tol {
            above += 1;
            if witness.map(|(_, w)| rel > w).unwrap_or(true) {
                witness = Some((k, rel));
            }
        }
    }
    ZeroVerdict {
        is_zero: above == 0,
        witness,
        above,
    }
}
