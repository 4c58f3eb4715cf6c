//! One function per subcommand.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sobolev2d::assembly::ExtensionOperator;
use sobolev2d::besov1d::{
    besov_seminorm_quadrature, extend_tb, trace_norm_full_p, trace_seminorm_p, PiecewiseC11,
    Samples1D,
};
use sobolev2d::besov_set;
use sobolev2d::cz::CzDecomposition;
use sobolev2d::jets::{minimizing_jet, KeystoneCase};
use sobolev2d::local::LocalOperator;
use sobolev2d::oracle::{min_besov_1d_tol, min_energy_2d_tol, GridField, GridProblem};
use sobolev2d::{AffineJet, Config, Point2, Square};

use crate::io::{self, csv, emit_json, emit_text, grid_nodes, read_json, Instance};
use crate::{CliError, Common, GridArgs};

const DEFAULT_GRID: usize = 64;

fn config_for(c: &Common, instance_p: Option<f64>) -> Result<Config, CliError> {
    let mut cfg = io::load_config(c.config.as_ref())?;
    if let Some(p) = c.p.or(instance_p) {
        cfg.p = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_instance(c: &Common) -> Result<(Instance, Config), CliError> {
    let inst: Instance = read_json(&c.input)?;
    let cfg = config_for(c, inst.p)?;
    Ok((inst, cfg))
}

pub fn decompose(c: &Common) -> Result<(), CliError> {
    let (inst, cfg) = load_instance(c)?;
    let d = CzDecomposition::build(&inst.points(), &cfg)?;
    emit_json(&d, c.out.as_ref())
}

pub fn set_seminorm(c: &Common) -> Result<(), CliError> {
    let (inst, cfg) = load_instance(c)?;
    let s = besov_set::set_seminorm(&inst.points(), cfg.p, cfg.angle_count)?;
    emit_json(&s, c.out.as_ref())
}

/// `{"xs": [...], "gs": [...], "p": 4.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineInstance {
    pub xs: Vec<f64>,
    pub gs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace1dReport {
    pub p: f64,
    /// Homogeneous trace seminorm to the power p.
    pub seminorm_p: f64,
    /// Inhomogeneous trace norm to the power p.
    pub norm_p: f64,
    pub functional_count: usize,
    /// Seminorm of the extension itself to the power p, by quadrature.
    pub extension_seminorm_p: f64,
    pub extension: PiecewiseC11,
}

pub fn trace1d(
    c: &Common,
    samples: Option<usize>,
    csv_path: Option<&PathBuf>,
) -> Result<(), CliError> {
    let inst: LineInstance = read_json(&c.input)?;
    let cfg = config_for(c, inst.p)?;
    let s = Samples1D::new(inst.xs, inst.gs, cfg.p)?;
    let semi = trace_seminorm_p(&s)?;
    let full = trace_norm_full_p(&s)?;
    let ext = extend_tb(&s)?;
    let quad = besov_seminorm_quadrature(&ext, cfg.p, cfg.quad_tol)?;
    if let Some(path) = csv_path {
        let n = samples.unwrap_or(401).max(2);
        let (a, b) = (ext.first() - 1.0, ext.last() + 1.0);
        let rows = (0..n).map(|k| {
            let x = a + (b - a) * k as f64 / (n - 1) as f64;
            let (v, d, _) = ext.eval3(x);
            vec![x, v, d]
        });
        emit_text(&csv(&["x", "value", "slope"], rows), Some(path))?;
    }
    let report = Trace1dReport {
        p: cfg.p,
        seminorm_p: semi.mp,
        norm_p: full.mp,
        functional_count: full.terms.len(),
        extension_seminorm_p: quad.value,
        extension: ext,
    };
    emit_json(&report, c.out.as_ref())
}

/// Input jet: `{"value": v, "grad": [gx, gy]}` at `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetInput {
    pub value: f64,
    pub grad: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalInstance {
    /// `[cx, cy, side]`.
    pub square: [f64; 3],
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub x0: [f64; 2],
    /// Prescribed jet at `x0`; the cost-minimizing jet when absent.
    #[serde(default)]
    pub jet: Option<JetInput>,
    #[serde(default)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    pub p: f64,
    pub mhat_p: f64,
    pub functional_count: usize,
    pub jet: AffineJet,
    pub straightened: bool,
}

pub fn local_extend(c: &Common, g: &GridArgs, csv_path: Option<&PathBuf>) -> Result<(), CliError> {
    let inst: LocalInstance = read_json(&c.input)?;
    let cfg = config_for(c, inst.p)?;
    if inst.values.len() != inst.points.len() {
        return Err(CliError::input(format!(
            "field `values`: {} entries for {} points",
            inst.values.len(),
            inst.points.len()
        )));
    }
    let q = Square::new(Point2::new(inst.square[0], inst.square[1]), inst.square[2]);
    let pts: Vec<Point2> = inst
        .points
        .iter()
        .map(|&[x, y]| Point2::new(x, y))
        .collect();
    let x0 = Point2::new(inst.x0[0], inst.x0[1]);
    let op = LocalOperator::new(&q, &pts, x0, cfg.p, cfg.angle_count)?;
    let jet = match &inst.jet {
        Some(j) => AffineJet {
            base: x0,
            value: j.value,
            grad: Point2::new(j.grad[0], j.grad[1]),
        },
        None => {
            let sites: Vec<usize> = (0..pts.len()).collect();
            let [v, gx, gy] = minimizing_jet(&op, &sites);
            AffineJet {
                base: x0,
                value: v.apply(&inst.values, &[]),
                grad: Point2::new(gx.apply(&inst.values, &[]), gy.apply(&inst.values, &[])),
            }
        }
    };
    let sol = op.solve(&inst.values, &jet)?;
    if let Some(path) = csv_path {
        let domain = g.domain.unwrap_or(q);
        let rows = grid_nodes(&domain, g.grid.unwrap_or(DEFAULT_GRID))
            .into_iter()
            .map(|x| {
                let j = sol.field.jet2(x);
                vec![x.x, x.y, j.value, j.grad[0], j.grad[1]]
            });
        emit_text(&csv(&["x", "y", "value", "gx", "gy"], rows), Some(path))?;
    }
    let report = LocalReport {
        p: cfg.p,
        mhat_p: sol.mhat_p,
        functional_count: op.functionals.len(),
        jet,
        straightened: op.straightening.is_some(),
    };
    emit_json(&report, c.out.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeystoneReport {
    pub mu: usize,
    pub leaf: usize,
    pub case: Option<KeystoneCase>,
    pub jet: AffineJet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetsReport {
    pub p: f64,
    pub trivial: bool,
    pub keystones: Vec<KeystoneReport>,
}

pub fn jets(c: &Common) -> Result<(), CliError> {
    let (inst, cfg) = load_instance(c)?;
    let op = ExtensionOperator::new(&inst.points(), &cfg)?;
    let jets = op.keystone_jets(inst.values()?)?;
    let d = &op.decomposition;
    let trivial = d.is_trivial();
    let keystones = jets
        .into_iter()
        .enumerate()
        .map(|(mu, jet)| KeystoneReport {
            mu,
            leaf: if trivial { 0 } else { d.keystones[mu] },
            case: (!trivial).then(|| op.rules[mu].case),
            jet,
        })
        .collect();
    emit_json(
        &JetsReport {
            p: cfg.p,
            trivial,
            keystones,
        },
        c.out.as_ref(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeled {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendReport {
    pub p: f64,
    pub points: usize,
    pub leaves: usize,
    pub keystones: usize,
    pub m_p: f64,
    pub m_p_root: f64,
    pub mhat_p: f64,
    pub functional_count: usize,
    pub max_interpolation_error: f64,
    pub outer_jet: AffineJet,
    pub keystone_jets: Vec<AffineJet>,
    pub functionals: Vec<Labeled>,
}

pub fn extend(c: &Common, g: &GridArgs, csv_path: Option<&PathBuf>) -> Result<(), CliError> {
    let (inst, cfg) = load_instance(c)?;
    let e = inst.points();
    let f = inst.values()?;
    let op = ExtensionOperator::new(&e, &cfg)?;
    let ext = op.apply(f)?;
    if let Some(path) = csv_path {
        let domain = g.domain.unwrap_or_else(|| inst.default_box());
        let rows = grid_nodes(&domain, g.grid.unwrap_or(DEFAULT_GRID))
            .into_iter()
            .map(|x| vec![x.x, x.y, ext.field.value(x)]);
        emit_text(&csv(&["x", "y", "value"], rows), Some(path))?;
    }
    let interp = e
        .iter()
        .zip(f)
        .map(|(x, v)| (ext.field.value(*x) - v).abs())
        .fold(0.0, f64::max);
    let report = ExtendReport {
        p: cfg.p,
        points: e.len(),
        leaves: op.decomposition.leaves.len(),
        keystones: op.decomposition.keystones.len(),
        m_p: ext.m_p,
        m_p_root: ext.m_p.powf(1.0 / cfg.p),
        mhat_p: ext.mhat_p,
        functional_count: op.functional_count(),
        max_interpolation_error: interp,
        outer_jet: ext.outer_jet,
        keystone_jets: ext.keystone_field.jets.clone(),
        functionals: ext
            .functional_report
            .into_iter()
            .map(|(label, value)| Labeled { label, value })
            .collect(),
    };
    emit_json(&report, c.out.as_ref())
}

pub fn eval(c: &Common, g: &GridArgs, at: &[Point2]) -> Result<(), CliError> {
    let (inst, cfg) = load_instance(c)?;
    let ext = ExtensionOperator::new(&inst.points(), &cfg)?.apply(inst.values()?)?;
    let mut pts = at.to_vec();
    if pts.is_empty() || g.grid.is_some() || g.domain.is_some() {
        let domain = g.domain.unwrap_or_else(|| inst.default_box());
        pts.extend(grid_nodes(&domain, g.grid.unwrap_or(DEFAULT_GRID)));
    }
    let rows = pts.into_iter().map(|x| {
        let j = ext.field.jet2(x);
        vec![x.x, x.y, j.value, j.grad[0], j.grad[1]]
    });
    emit_text(&csv(&["x", "y", "value", "gx", "gy"], rows), c.out.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub kind: String,
    pub p: f64,
    pub nodes: usize,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Square>,
    pub energy_root: f64,
}

fn grid_problem(inst: &Instance, cfg: &Config, g: &GridArgs) -> Result<GridProblem, CliError> {
    let f = inst.values()?;
    Ok(GridProblem {
        domain: g.domain.unwrap_or_else(|| inst.default_box()),
        n: g.grid.unwrap_or(cfg.oracle_grid),
        p: cfg.p,
        constraints: inst.points().into_iter().zip(f.iter().copied()).collect(),
        jets: Vec::new(),
    })
}

fn grid_csv(field: &GridField) -> String {
    let rows = (0..field.n).flat_map(|j| {
        (0..field.n).map(move |i| {
            let x = field.node(i, j);
            vec![x.x, x.y, field.values[j * field.n + i]]
        })
    });
    csv(&["x", "y", "value"], rows)
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, c: &Common) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::input(format!("{}: {e}", c.input.display())))
}

pub fn oracle(
    c: &Common,
    g: &GridArgs,
    line_nodes: usize,
    csv_path: Option<&PathBuf>,
) -> Result<(), CliError> {
    let raw: Value = read_json(&c.input)?;
    let report = if raw.get("box").is_some() {
        let mut prob: GridProblem = parse(raw, c)?;
        let cfg = config_for(c, Some(prob.p))?;
        prob.p = cfg.p;
        let (e, field) = min_energy_2d_tol(&prob, cfg.cg_tol)?;
        if let Some(path) = csv_path {
            emit_text(&grid_csv(&field), Some(path))?;
        }
        OracleReport {
            kind: "grid".into(),
            p: prob.p,
            nodes: prob.n,
            domain: Some(prob.domain),
            energy_root: e,
        }
    } else if raw.get("xs").is_some() {
        let inst: LineInstance = parse(raw, c)?;
        let cfg = config_for(c, inst.p)?;
        let e = min_besov_1d_tol(&inst.xs, &inst.gs, cfg.p, line_nodes, cfg.cg_tol)?;
        OracleReport {
            kind: "line".into(),
            p: cfg.p,
            nodes: line_nodes,
            domain: None,
            energy_root: e,
        }
    } else {
        let inst: Instance = parse(raw, c)?;
        let cfg = config_for(c, inst.p)?;
        let prob = grid_problem(&inst, &cfg, g)?;
        let (e, field) = min_energy_2d_tol(&prob, cfg.cg_tol)?;
        if let Some(path) = csv_path {
            emit_text(&grid_csv(&field), Some(path))?;
        }
        OracleReport {
            kind: "grid".into(),
            p: prob.p,
            nodes: prob.n,
            domain: Some(prob.domain),
            energy_root: e,
        }
    };
    emit_json(&report, c.out.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub p: f64,
    pub nodes: usize,
    #[serde(rename = "box")]
    pub domain: Square,
    #[serde(rename = "M_p_root")]
    pub m_p_root: f64,
    pub oracle_root: f64,
    pub ratio: f64,
}

pub fn compare(c: &Common, g: &GridArgs) -> Result<(), CliError> {
    let (inst, cfg) = load_instance(c)?;
    let ext = ExtensionOperator::new(&inst.points(), &cfg)?.apply(inst.values()?)?;
    let prob = grid_problem(&inst, &cfg, g)?;
    let (oracle_root, _) = min_energy_2d_tol(&prob, cfg.cg_tol)?;
    let m_p_root = ext.m_p.powf(1.0 / cfg.p);
    emit_json(
        &CompareReport {
            p: cfg.p,
            nodes: prob.n,
            domain: prob.domain,
            m_p_root,
            oracle_root,
            ratio: m_p_root / oracle_root,
        },
        c.out.as_ref(),
    )
}
