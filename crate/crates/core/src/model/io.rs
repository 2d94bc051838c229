//! Model files: a JSON grillage/beam description or dense CSV matrices.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    apply_rayleigh_damping, build_grillage, BiodynamicModel, CrowdLayout, DofLabel, Direction, Grillage, GrillageElement, GrillageNode,
    GrillageSupport, StructuralModel,
};
use crate::error::{Error, Result};
use crate::io::read_labeled_matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighSpec {
    pub zeta_i: f64,
    pub zeta_j: f64,
    pub mode_i: usize,
    pub mode_j: usize,
}

/// Crowd section of a model file; positions are node ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrowdSpec {
    #[serde(default)]
    pub active: Vec<usize>,
    #[serde(default)]
    pub passive: Vec<usize>,
    #[serde(default = "BiodynamicModel::coermann")]
    pub biodynamic: BiodynamicModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub nodes: Vec<GrillageNode>,
    pub elements: Vec<GrillageElement>,
    #[serde(default)]
    pub supports: Vec<GrillageSupport>,
    #[serde(default)]
    pub condense_rotations: bool,
    pub rayleigh: Option<RayleighSpec>,
    #[serde(default)]
    pub crowd: CrowdSpec,
    /// Node whose vertical dof is reported by default.
    pub label_node: Option<usize>,
}

/// Empty structure plus the crowd described alongside it.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub model: StructuralModel,
    pub layout: CrowdLayout,
    pub biodynamic: BiodynamicModel,
    pub label_dof: Option<usize>,
}

impl ModelFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn build(&self) -> Result<LoadedModel> {
        let grillage = Grillage {
            nodes: self.nodes.clone(),
            elements: self.elements.clone(),
            supports: self.supports.clone(),
            condense_rotations: self.condense_rotations,
        };
        let mut model = build_grillage(&grillage)?;
        if let Some(r) = &self.rayleigh {
            model = apply_rayleigh_damping(model, r.zeta_i, r.zeta_j, r.mode_i, r.mode_j)?;
        }
        let layout = CrowdLayout::from_nodes(&model, &self.crowd.active, &self.crowd.passive)?;
        layout.validate(&model)?;
        self.crowd.biodynamic.validate()?;
        let label_dof = self
            .label_node
            .map(|n| {
                model
                    .dof_index(&DofLabel::new(n, Direction::Uz))
                    .ok_or_else(|| Error::InvalidParameter(format!("label node {n} has no free vertical dof")))
            })
            .transpose()?;
        Ok(LoadedModel {
            model,
            layout,
            biodynamic: self.crowd.biodynamic,
            label_dof,
        })
    }
}

/// Imports dense M, C, K (and optionally G) matrices. Each file starts
/// with a header row of dof labels; the G file's header names the load
/// channels and its rows follow the dof order of M. Spectator dofs (label
/// suffix `:h`) must come last. The structure mass is taken as the sum of
/// the mass entries over the vertical structure dofs.
pub fn import_matrices(mass: &Path, damping: &Path, stiffness: &Path, input: Option<&Path>) -> Result<StructuralModel> {
    let (labels_m, m) = read_labeled_matrix(mass)?;
    let labels = parse_labels(&labels_m)?;
    let mut mats = Vec::new();
    for path in [damping, stiffness] {
        let (l, a) = read_labeled_matrix(path)?;
        if l != labels_m {
            return Err(Error::InvalidInput(format!("{}: dof labels differ from the mass matrix", path.display())));
        }
        mats.push(a);
    }
    let k = mats.pop().expect("two matrices read");
    let c = mats.pop().expect("two matrices read");
    let n = labels.len();
    if m.nrows() != n {
        return Err(Error::InvalidInput(format!("{}: {} rows for {n} labels", mass.display(), m.nrows())));
    }
    let n_structure = labels.iter().take_while(|l| l.direction != Direction::Human).count();
    if labels[n_structure..].iter().any(|l| l.direction != Direction::Human) {
        return Err(Error::InvalidInput("spectator dofs must follow all structure dofs".into()));
    }
    let g = match input {
        Some(path) => read_labeled_matrix(path)?.1,
        None => DMatrix::zeros(n, 0),
    };
    let vertical: Vec<usize> = (0..n_structure).filter(|&i| labels[i].direction == Direction::Uz).collect();
    let structure_mass = vertical.iter().flat_map(|&i| vertical.iter().map(move |&j| (i, j))).map(|ij| m[ij]).sum();
    StructuralModel::from_parts(m, c, k, g, labels, n_structure, structure_mass)
}

fn parse_labels(header: &[String]) -> Result<Vec<DofLabel>> {
    header.iter().map(|s| s.parse()).collect()
}
