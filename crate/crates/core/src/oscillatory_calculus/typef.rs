use super::quadrature::transversal_integral_tol;
use super::signal::{Primitive, ThetaSignal};
use crate::error::{Error, Result};

/// Index of a signal in the bank of a [`TypeFFunction`].
pub type SignalId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermKind {
    /// `f(theta0 + omega_{phase} xi_d)`.
    Single { f: SignalId, phase: usize },
    /// `g(theta0 + omega_{phase_g} xi_d) h(theta0 + omega_{phase_h} xi_d)`.
    Product { g: SignalId, h: SignalId, phase_g: usize, phase_h: usize },
}

/// `weight * kind * r_component`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeFTerm {
    /// Flattened eigen-direction the term is attached to.
    pub component: usize,
    pub kind: TermKind,
    pub weight: f64,
}

impl TypeFTerm {
    fn phases(&self) -> (usize, Option<usize>) {
        match self.kind {
            TermKind::Single { phase, .. } => (phase, None),
            TermKind::Product { phase_g, phase_h, .. } => (phase_g, Some(phase_h)),
        }
    }
}

/// Finite sum of single-phase terms and two-phase products in `(theta0, xi_d)`.
#[derive(Debug, Clone)]
pub struct TypeFFunction {
    /// Phase (mode) of each flattened component.
    pub comp_phase: Vec<usize>,
    /// `omega` of each phase.
    pub omegas: Vec<f64>,
    pub signals: Vec<ThetaSignal>,
    pub terms: Vec<TypeFTerm>,
}

impl TypeFFunction {
    pub fn new(comp_phase: Vec<usize>, omegas: Vec<f64>) -> TypeFFunction {
        TypeFFunction { comp_phase, omegas, signals: Vec::new(), terms: Vec::new() }
    }

    pub fn add_signal(&mut self, s: ThetaSignal) -> SignalId {
        self.signals.push(s);
        self.signals.len() - 1
    }

    pub fn push(&mut self, term: TypeFTerm) -> Result<()> {
        let (a, b) = term.phases();
        let n_phase = self.omegas.len();
        if term.component >= self.comp_phase.len() || a >= n_phase || b.is_some_and(|b| b >= n_phase) {
            return Err(Error::Contract("type-F term refers to a missing component or phase".into()));
        }
        let ids = match term.kind {
            TermKind::Single { f, .. } => vec![f],
            TermKind::Product { g, h, .. } => vec![g, h],
        };
        if ids.iter().any(|&i| i >= self.signals.len()) {
            return Err(Error::Contract("type-F term refers to a missing signal".into()));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn add_single(&mut self, component: usize, f: ThetaSignal, phase: usize, weight: f64) -> Result<()> {
        let f = self.add_signal(f);
        self.push(TypeFTerm { component, kind: TermKind::Single { f, phase }, weight })
    }

    pub fn add_product(
        &mut self,
        component: usize,
        g: ThetaSignal,
        phase_g: usize,
        h: ThetaSignal,
        phase_h: usize,
        weight: f64,
    ) -> Result<()> {
        let g = self.add_signal(g);
        let h = self.add_signal(h);
        self.push(TypeFTerm { component, kind: TermKind::Product { g, h, phase_g, phase_h }, weight })
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn resonant(&self, t: &TypeFTerm) -> bool {
        let own = self.comp_phase[t.component];
        let (a, b) = t.phases();
        a == own && b.is_none_or(|b| b == own)
    }

    /// Pointwise value of component `i` at `(theta0, xi_d)`.
    pub fn eval(&self, i: usize, theta0: f64, xi_d: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.component == i)
            .map(|t| {
                let z = |ph: usize| theta0 + self.omegas[ph] * xi_d;
                t.weight
                    * match t.kind {
                        TermKind::Single { f, phase } => self.signals[f].eval(z(phase)),
                        TermKind::Product { g, h, phase_g, phase_h } => {
                            self.signals[g].eval(z(phase_g)) * self.signals[h].eval(z(phase_h))
                        }
                    }
            })
            .sum()
    }
}

/// The averaging operator: keep exactly the terms whose phases all match the
/// phase of their component.
#[allow(non_snake_case)]
pub fn apply_E(f: &TypeFFunction) -> TypeFFunction {
    let mut out = f.clone();
    out.terms.retain(|t| f.resonant(t));
    out
}

/// `(I - E) F`.
pub fn remove_resonant(f: &TypeFFunction) -> TypeFFunction {
    let mut out = f.clone();
    out.terms.retain(|t| !f.resonant(t));
    out
}

/// One evaluable piece of a corrector component.
#[derive(Debug, Clone)]
pub enum CorrectorPiece {
    /// `factor * (P(theta0 + omega_phase xi_d) - P(sign * infinity))`.
    Primitive { component: usize, phase: usize, factor: f64, prim: Primitive, end: f64 },
    /// `factor * g(theta0 + omega_i xi_d) * (H(theta0 + omega_phase xi_d) - H(sign * infinity))`.
    Diagonal { component: usize, phase: usize, factor: f64, g: ThetaSignal, prim: Primitive, end: f64 },
    /// `factor * transversal_integral(g, h, ...)`.
    Quadrature { component: usize, phase_g: usize, phase_h: usize, factor: f64, g: ThetaSignal, h: ThetaSignal },
}

impl CorrectorPiece {
    pub fn component(&self) -> usize {
        match self {
            CorrectorPiece::Primitive { component, .. }
            | CorrectorPiece::Diagonal { component, .. }
            | CorrectorPiece::Quadrature { component, .. } => *component,
        }
    }

    /// Phases the piece is carried on.
    pub fn phases(&self) -> Vec<usize> {
        match self {
            CorrectorPiece::Primitive { phase, .. } => vec![*phase],
            CorrectorPiece::Diagonal { phase, .. } => vec![*phase],
            CorrectorPiece::Quadrature { phase_g, phase_h, .. } => vec![*phase_g, *phase_h],
        }
    }
}

/// Bounded solution of `(d_xi - omega_i d_theta0) u_i = F_i`, as a list of pieces.
#[derive(Debug, Clone)]
pub struct CorrectorRep {
    pub comp_phase: Vec<usize>,
    pub omegas: Vec<f64>,
    pub pieces: Vec<CorrectorPiece>,
    pub p: f64,
    pub quad_tol: f64,
}

impl CorrectorRep {
    pub fn empty(comp_phase: Vec<usize>, omegas: Vec<f64>, p: f64) -> CorrectorRep {
        CorrectorRep { comp_phase, omegas, pieces: vec![], p, quad_tol: 1e-9 }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn n_components(&self) -> usize {
        self.comp_phase.len()
    }

    pub fn eval_piece(&self, piece: &CorrectorPiece, theta0: f64, xi_d: f64) -> Result<f64> {
        let z = |ph: usize| theta0 + self.omegas[ph] * xi_d;
        Ok(match piece {
            CorrectorPiece::Primitive { phase, factor, prim, end, .. } => factor * (prim.eval(z(*phase)) - end),
            CorrectorPiece::Diagonal { component, phase, factor, g, prim, end } => {
                let own = self.comp_phase[*component];
                factor * g.eval(z(own)) * (prim.eval(z(*phase)) - end)
            }
            CorrectorPiece::Quadrature { component, phase_g, phase_h, factor, g, h } => {
                let own = self.comp_phase[*component];
                factor
                    * transversal_integral_tol(
                        g,
                        h,
                        self.omegas[own],
                        self.omegas[*phase_g],
                        self.omegas[*phase_h],
                        theta0,
                        xi_d,
                        self.quad_tol,
                    )?
            }
        })
    }

    /// Component `i` at `(theta0, xi_d)`.
    pub fn eval(&self, i: usize, theta0: f64, xi_d: f64) -> Result<f64> {
        let mut acc = 0.0;
        for piece in self.pieces.iter().filter(|p| p.component() == i) {
            acc += self.eval_piece(piece, theta0, xi_d)?;
        }
        Ok(acc)
    }

    /// All components at `(theta0, xi_d)`.
    pub fn eval_all(&self, theta0: f64, xi_d: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_components()];
        for piece in &self.pieces {
            out[piece.component()] += self.eval_piece(piece, theta0, xi_d)?;
        }
        Ok(out)
    }

    /// Multiply every piece by `c`.
    pub fn scale(&mut self, c: f64) {
        for p in &mut self.pieces {
            match p {
                CorrectorPiece::Primitive { factor, .. }
                | CorrectorPiece::Diagonal { factor, .. }
                | CorrectorPiece::Quadrature { factor, .. } => *factor *= c,
            }
        }
    }
}

/// Primitive of `f`, decaying when `f` has zero mean.
fn primitive(f: &ThetaSignal) -> Primitive {
    Primitive::decaying(f).unwrap_or_else(|_| Primitive::of(f))
}

/// `R_infinity F = int_infinity^{xi_d} F_i(theta0 + omega_i (xi_d - s), s) ds`
/// for `F` with `E F = 0`.
#[allow(non_snake_case)]
pub fn apply_R_infinity(f: &TypeFFunction, p: f64) -> Result<CorrectorRep> {
    let mut rep = CorrectorRep::empty(f.comp_phase.clone(), f.omegas.clone(), p);
    for t in &f.terms {
        if t.weight == 0.0 {
            continue;
        }
        let i = t.component;
        let own = f.comp_phase[i];
        let w_i = f.omegas[own];
        match t.kind {
            TermKind::Single { f: sid, phase } => {
                if phase == own {
                    return Err(Error::Contract(format!("resonant single term on component {i}; apply (I - E) first")));
                }
                let sig = &f.signals[sid];
                if sig.is_zero() {
                    continue;
                }
                let alpha = f.omegas[phase] - w_i;
                let prim = primitive(sig);
                let end = prim.end(alpha > 0.0);
                rep.pieces.push(CorrectorPiece::Primitive { component: i, phase, factor: t.weight / alpha, prim, end });
            }
            TermKind::Product { g, h, phase_g, phase_h } => {
                let (sg, sh) = (&f.signals[g], &f.signals[h]);
                if sg.is_zero() || sh.is_zero() {
                    continue;
                }
                match (phase_g == own, phase_h == own) {
                    (true, true) => {
                        return Err(Error::Contract(format!(
                            "resonant product term on component {i}; apply (I - E) first"
                        )));
                    }
                    (true, false) | (false, true) => {
                        let (diag, other, phase) = if phase_g == own { (sg, sh, phase_h) } else { (sh, sg, phase_g) };
                        let alpha = f.omegas[phase] - w_i;
                        let prim = primitive(other);
                        let end = prim.end(alpha > 0.0);
                        rep.pieces.push(CorrectorPiece::Diagonal {
                            component: i,
                            phase,
                            factor: t.weight / alpha,
                            g: diag.clone(),
                            prim,
                            end,
                        });
                    }
                    (false, false) => {
                        if phase_g == phase_h {
                            // same off-diagonal phase: the product is a single term
                            let prod = sg.product(sh)?;
                            let alpha = f.omegas[phase_g] - w_i;
                            let prim = primitive(&prod);
                            let end = prim.end(alpha > 0.0);
                            rep.pieces.push(CorrectorPiece::Primitive {
                                component: i,
                                phase: phase_g,
                                factor: t.weight / alpha,
                                prim,
                                end,
                            });
                        } else {
                            rep.pieces.push(CorrectorPiece::Quadrature {
                                component: i,
                                phase_g,
                                phase_h,
                                factor: t.weight,
                                g: sg.clone(),
                                h: sh.clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Single-phase pieces of a corrector rewritten as type-F terms, with the
/// primitive sampled on the window grid.
pub fn single_phase_terms(rep: &CorrectorRep, theta_max: f64, n: usize) -> Result<TypeFFunction> {
    let mut f = TypeFFunction::new(rep.comp_phase.clone(), rep.omegas.clone());
    for piece in &rep.pieces {
        if let CorrectorPiece::Primitive { component, phase, factor, prim, end } = piece {
            let s = ThetaSignal::from_fn(theta_max, n, |z| prim.eval(z) - end)?;
            f.add_single(*component, s, *phase, *factor)?;
        }
    }
    Ok(f)
}
