//! Patching local extensions into the global interpolant and the trace norm.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cz::{CzDecomposition, LeafIndex};
use crate::field::{Field2D, Jet2, ScalarField};
use crate::geometry::{
    dilate, AffineJet, JetComponent, LinearFunctional, Point2, Square, WhitneyField,
};
use crate::jets::{constant_path_field, keystone_rule, minimizing_jet, KeystoneRule};
use crate::local::LocalOperator;
use crate::smooth::{plateau, pow_p};
use crate::{Config, Error, Result};

/// Relative size of the support of each raw partition weight. Neighbors may be
/// twice as large, so the support of a neighbor reaches `0.048 delta` into a
/// leaf and the weight stays exactly 1 on `0.9 Q`.
pub const POU_SUPPORT: f64 = 1.048;

/// Dilation of a leaf used for its local extension.
pub const LOCAL_DILATION: f64 = 1.3;

/// Weights `theta_nu = raw_nu / sum_mu raw_mu`, with `raw_nu` a product of
/// plateaued smoothsteps equal to 1 on `Q_nu` and 0 outside `1.048 Q_nu`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub root: Square,
    pub leaves: Vec<Square>,
    adjacency: Vec<Vec<usize>>,
    index: LeafIndex,
}

fn raw_weight(q: &Square, x: Point2) -> Jet2 {
    let d = x - q.center;
    let h = q.half();
    let (a, a1, a2) = plateau(d.x, h, POU_SUPPORT * h);
    let (b, b1, b2) = plateau(d.y, h, POU_SUPPORT * h);
    Jet2 {
        value: a * b,
        grad: [a1 * b, a * b1],
        hess: [[a2 * b, a1 * b1], [a1 * b1, a * b2]],
    }
}

/// Jet of `1 / s`.
fn reciprocal(s: &Jet2) -> Jet2 {
    let r = 1.0 / s.value;
    let g = [-s.grad[0] * r * r, -s.grad[1] * r * r];
    let hess = std::array::from_fn(|i| {
        std::array::from_fn(|k| -s.hess[i][k] * r * r + 2.0 * s.grad[i] * s.grad[k] * r * r * r)
    });
    Jet2 {
        value: r,
        grad: g,
        hess,
    }
}

impl PartitionOfUnity {
    pub fn new(decomp: &CzDecomposition) -> Self {
        PartitionOfUnity {
            root: decomp.root,
            leaves: decomp.leaves.clone(),
            adjacency: decomp.adjacency.clone(),
            index: decomp.leaf_index(),
        }
    }

    /// Raw weights that do not vanish at `x`; empty outside the root.
    pub fn raw_at(&self, x: Point2) -> Vec<(usize, Jet2)> {
        if (x - self.root.center).norm_inf() >= self.root.half() {
            return Vec::new();
        }
        let home = self.index.locate(x);
        self.adjacency[home]
            .iter()
            .filter_map(|&nu| {
                let q = &self.leaves[nu];
                ((x - q.center).norm_inf() < POU_SUPPORT * q.half()).then(|| (nu, raw_weight(q, x)))
            })
            .collect()
    }

    /// Normalized weights at `x` (inside the root).
    pub fn weights_at(&self, x: Point2) -> Result<Vec<(usize, Jet2)>> {
        let raw = self.raw_at(x);
        let mut sum = Jet2::default();
        for (_, w) in &raw {
            sum.axpy(1.0, w);
        }
        if sum.value < 0.5 {
            return Err(Error::internal(format!(
                "partition denominator {} at {x:?}",
                sum.value
            )));
        }
        let r = reciprocal(&sum);
        Ok(raw.into_iter().map(|(nu, w)| (nu, w.mul(&r))).collect())
    }

    /// `theta_nu` as a field (zero outside the root).
    pub fn weight_field(self: &Arc<Self>, nu: usize) -> Field2D {
        Field2D::new(Weight {
            pou: self.clone(),
            nu,
        })
    }
}

struct Weight {
    pou: Arc<PartitionOfUnity>,
    nu: usize,
}

impl ScalarField for Weight {
    fn jet2(&self, x: Point2) -> Jet2 {
        if self.pou.raw_at(x).is_empty() {
            return Jet2::default();
        }
        self.pou
            .weights_at(x)
            .expect("leaves tile the root")
            .into_iter()
            .find(|(nu, _)| *nu == self.nu)
            .map(|(_, w)| w)
            .unwrap_or_default()
    }
}

/// `sum_nu theta_nu F_nu` on the root, zero outside.
struct Blend {
    pou: Arc<PartitionOfUnity>,
    locals: Vec<Field2D>,
}

impl ScalarField for Blend {
    fn jet2(&self, x: Point2) -> Jet2 {
        let raw = self.pou.raw_at(x);
        if raw.is_empty() {
            return Jet2::default();
        }
        let (mut num, mut den) = (Jet2::default(), Jet2::default());
        for (nu, w) in &raw {
            num.axpy(1.0, &w.mul(&self.locals[*nu].jet2(x)));
            den.axpy(1.0, w);
        }
        num.mul(&reciprocal(&den))
    }

    fn value(&self, x: Point2) -> f64 {
        let raw = self.pou.raw_at(x);
        if raw.is_empty() {
            return 0.0;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (nu, w) in &raw {
            if w.value != 0.0 {
                num += w.value * self.locals[*nu].value(x);
                den += w.value;
            }
        }
        num / den
    }
}

/// A named linear functional of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFunctional {
    pub label: String,
    pub functional: LinearFunctional,
}

/// Data-independent part of the extension operator for a fixed set `E`.
#[derive(Debug, Clone)]
pub struct ExtensionOperator {
    pub config: Config,
    pub decomposition: CzDecomposition,
    pub pou: Arc<PartitionOfUnity>,
    /// Local operators per leaf (a single one on the root in the trivial case).
    pub locals: Vec<LocalOperator>,
    /// Keystone jet rules; in the trivial case one rule for the root jet.
    pub rules: Vec<KeystoneRule>,
    /// `M(f)^p = sum |lambda_i(f)|^p`.
    pub functionals: Vec<NamedFunctional>,
}

/// Result of applying the operator to data.
#[derive(Debug, Clone)]
pub struct Extension {
    pub field: Field2D,
    pub mhat_p: f64,
    pub m_p: f64,
    pub functional_report: Vec<(String, f64)>,
    /// Selected keystone jets (the root jet in the trivial case).
    pub keystone_field: WhitneyField,
    /// Jets at the leaf representatives.
    pub leaf_jets: WhitneyField,
    pub outer_jet: AffineJet,
}

/// Jet of `rule` rebased at `x`, as functionals of the data.
fn rebased_rule(rule: &KeystoneRule, x: Point2) -> [LinearFunctional; 3] {
    let d = x - rule.base;
    let mut value = rule.value.clone();
    value.axpy(d.x, &rule.gx).axpy(d.y, &rule.gy);
    [value, rule.gx.clone(), rule.gy.clone()]
}

/// Local functional with local sites mapped to global ones and jet 0
/// replaced by `jet` (value, gx, gy functionals of the data).
fn globalize(
    l: &LinearFunctional,
    sites: &[usize],
    jet: &[LinearFunctional; 3],
) -> LinearFunctional {
    let mut out = LinearFunctional::new();
    for (&k, &c) in &l.coeffs_f {
        out.add_f(sites[k], c * l.offset_weight);
    }
    for (&(_, comp), &c) in &l.coeffs_jet {
        let idx = match comp {
            JetComponent::Value => 0,
            JetComponent::Gx => 1,
            JetComponent::Gy => 2,
        };
        out.axpy(c * l.offset_weight, &jet[idx]);
    }
    out
}

impl ExtensionOperator {
    pub fn new(e: &[Point2], cfg: &Config) -> Result<Self> {
        let decomposition = CzDecomposition::build(e, cfg)?;
        Self::from_decomposition(decomposition, cfg)
    }

    pub fn from_decomposition(decomposition: CzDecomposition, cfg: &Config) -> Result<Self> {
        cfg.validate()?;
        let d = &decomposition;
        let pou = Arc::new(PartitionOfUnity::new(d));
        let pts = |idx: &[usize]| idx.iter().map(|&i| d.points[i]).collect::<Vec<_>>();
        let (locals, rules, functionals) = if d.is_trivial() {
            let all: Vec<usize> = (0..d.points.len()).collect();
            let op = LocalOperator::new(&d.root, &d.points, d.x_nu[0], cfg.p, cfg.angle_count)?;
            let [value, gx, gy] = minimizing_jet(&op, &all);
            let rule = KeystoneRule {
                case: crate::jets::KeystoneCase::Flat,
                base: d.x_nu[0],
                value,
                gx,
                gy,
                chords: None,
            };
            let jet = rebased_rule(&rule, op.x0);
            let fs = op
                .functionals
                .iter()
                .zip(&op.kinds)
                .map(|(l, k)| NamedFunctional {
                    label: format!("root {k:?}"),
                    functional: globalize(l, &all, &jet),
                })
                .collect();
            (vec![op], vec![rule], fs)
        } else {
            let locals = d
                .leaves
                .par_iter()
                .enumerate()
                .map(|(nu, q)| {
                    LocalOperator::new(
                        &dilate(q, LOCAL_DILATION)?,
                        &pts(&d.e_nu[nu]),
                        d.x_nu[nu],
                        cfg.p,
                        cfg.angle_count,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let rules = (0..d.keystones.len())
                .into_par_iter()
                .map(|mu| keystone_rule(mu, d, cfg))
                .collect::<Result<Vec<_>>>()?;
            let mut fs = Vec::new();
            for (nu, op) in locals.iter().enumerate() {
                let jet = rebased_rule(&rules[d.mu_of_nu[nu]], d.x_nu[nu]);
                for (l, k) in op.functionals.iter().zip(&op.kinds) {
                    fs.push(NamedFunctional {
                        label: format!("leaf {nu} {k:?}"),
                        functional: globalize(l, &d.e_nu[nu], &jet),
                    });
                }
            }
            for pair in d.delta_pairs.iter().filter(|p| p.mu != p.mu2) {
                let (a, b) = (&rules[pair.mu], &rules[pair.mu2]);
                let wg = pair.delta.powf((2.0 - cfg.p) / cfg.p);
                let wv = pair.delta.powf((2.0 - 2.0 * cfg.p) / cfg.p);
                let bj = rebased_rule(b, a.base);
                let mut gx = a.gx.clone();
                gx.axpy(-1.0, &b.gx);
                let mut gy = a.gy.clone();
                gy.axpy(-1.0, &b.gy);
                let mut value = a.value.clone();
                value.axpy(-1.0, &bj[0]);
                for (name, l, w) in [("value", value, wv), ("gx", gx, wg), ("gy", gy, wg)] {
                    let mut scaled = LinearFunctional::new();
                    scaled.axpy(w, &l);
                    fs.push(NamedFunctional {
                        label: format!("pair {}-{} {name}", pair.mu, pair.mu2),
                        functional: scaled,
                    });
                }
            }
            (locals, rules, fs)
        };
        let functionals = functionals
            .into_iter()
            .filter(|n| !n.functional.is_zero())
            .collect();
        Ok(ExtensionOperator {
            config: cfg.clone(),
            decomposition,
            pou,
            locals,
            rules,
            functionals,
        })
    }

    pub fn functional_count(&self) -> usize {
        self.functionals.len()
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.decomposition.points.len() {
            return Err(Error::invalid_input(format!(
                "{} values for {} points",
                f.len(),
                self.decomposition.points.len()
            )));
        }
        if let Some(v) = f.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid_input(format!("non-finite value {v}")));
        }
        Ok(())
    }

    /// `M(f)^p`.
    pub fn m_p(&self, f: &[f64]) -> f64 {
        self.functionals
            .iter()
            .map(|n| pow_p(n.functional.apply(f, &[]).abs(), self.config.p))
            .sum()
    }

    /// Selected keystone jets for `f`.
    pub fn keystone_jets(&self, f: &[f64]) -> Result<Vec<AffineJet>> {
        self.check_len(f)?;
        Ok(self.rules.iter().map(|r| r.apply(f)).collect())
    }

    /// Jets at the leaf representatives induced by keystone jets.
    pub fn leaf_jets(&self, lsharp: &[AffineJet]) -> Result<WhitneyField> {
        if self.decomposition.is_trivial() {
            let j = lsharp
                .first()
                .ok_or_else(|| Error::invalid_input("missing root jet"))?;
            return Ok(WhitneyField {
                jets: vec![j.rebased(self.decomposition.x_nu[0])],
            });
        }
        constant_path_field(lsharp, &self.decomposition)
    }

    fn local_data(&self, nu: usize, f: &[f64]) -> Vec<f64> {
        if self.decomposition.is_trivial() {
            f.to_vec()
        } else {
            self.decomposition.e_nu[nu].iter().map(|&i| f[i]).collect()
        }
    }

    /// `Mhat(f, L#)^p`: local costs plus jet mismatches between neighbors.
    pub fn mhat_p(&self, f: &[f64], lsharp: &[AffineJet]) -> Result<f64> {
        self.check_len(f)?;
        let lj = self.leaf_jets(lsharp)?;
        let p = self.config.p;
        let d = &self.decomposition;
        let mut total = 0.0;
        for (nu, op) in self.locals.iter().enumerate() {
            total += op.mhat_p(&self.local_data(nu, f), &lj.jets[nu]);
        }
        if !d.is_trivial() {
            for (nu, nbrs) in d.adjacency.iter().enumerate() {
                let (a, x, delta) = (&lj.jets[nu], d.x_nu[nu], d.leaves[nu].side);
                for &nu2 in nbrs.iter().filter(|&&k| k != nu) {
                    let b = &lj.jets[nu2];
                    total += pow_p((a.grad - b.grad).norm(), p) * delta.powf(2.0 - p)
                        + pow_p((a.eval(x) - b.eval(x)).abs(), p) * delta.powf(2.0 - 2.0 * p);
                }
            }
        }
        Ok(total)
    }

    /// Global field for data `f` and keystone jets `lsharp`.
    pub fn assemble(&self, f: &[f64], lsharp: &[AffineJet]) -> Result<(Field2D, AffineJet)> {
        self.check_len(f)?;
        let lj = self.leaf_jets(lsharp)?;
        let locals = self
            .locals
            .iter()
            .enumerate()
            .map(|(nu, op)| op.field(&self.local_data(nu, f), &lj.jets[nu]))
            .collect::<Result<Vec<_>>>()?;
        let blend = Field2D::new(Blend {
            pou: self.pou.clone(),
            locals,
        });
        let root = self.decomposition.root;
        let outer = blend.jet(root.center);
        let cutoff = Field2D::box_bump(root.center, 0.99 * root.half(), root.half());
        let l_circ = Field2D::affine(outer);
        Ok((cutoff.mul(&blend.sub(&l_circ)).add(&l_circ), outer))
    }

    pub fn apply(&self, f: &[f64]) -> Result<Extension> {
        let lsharp = self.keystone_jets(f)?;
        let (field, outer_jet) = self.assemble(f, &lsharp)?;
        let functional_report: Vec<(String, f64)> = self
            .functionals
            .iter()
            .map(|n| (n.label.clone(), n.functional.apply(f, &[])))
            .collect();
        let m_p = functional_report
            .iter()
            .map(|(_, v)| pow_p(v.abs(), self.config.p))
            .sum();
        Ok(Extension {
            field,
            mhat_p: self.mhat_p(f, &lsharp)?,
            m_p,
            functional_report,
            leaf_jets: self.leaf_jets(&lsharp)?,
            keystone_field: WhitneyField { jets: lsharp },
            outer_jet,
        })
    }
}

/// Extension of `f` on `e` with the trace-norm functionals.
pub fn extend(f: &[f64], e: &[Point2], cfg: &Config) -> Result<Extension> {
    if f.len() != e.len() {
        return Err(Error::invalid_input(format!(
            "{} values for {} points",
            f.len(),
            e.len()
        )));
    }
    ExtensionOperator::new(e, cfg)?.apply(f)
}

#[cfg(test)]
mod tests;
