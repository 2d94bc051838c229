//! Euler–Bernoulli beam and plane-grillage assembly with cubic Hermite
//! bending, linear torsion and consistent mass.
//!
//! Every node carries the vertical displacement `w` and the two slopes
//! `∂w/∂x` (label `ry`) and `∂w/∂y` (label `rx`). Slopes that no element
//! stiffens are dropped, so a straight beam without torsional stiffness
//! ends up with one rotation per node.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix4, SMatrix};
use serde::{Deserialize, Serialize};

use super::{DofLabel, Direction, StructuralModel};
use crate::error::{Error, Result};

type Matrix6 = SMatrix<f64, 6, 6>;

/// Bending stiffness of a Hermite element on `(w1, θ1, w2, θ2)`.
pub fn hermite_stiffness(ei: f64, l: f64) -> Matrix4<f64> {
    let k = ei / (l * l * l);
    let l2 = l * l;
    Matrix4::new(
        12.0, 6.0 * l, -12.0, 6.0 * l,
        6.0 * l, 4.0 * l2, -6.0 * l, 2.0 * l2,
        -12.0, -6.0 * l, 12.0, -6.0 * l,
        6.0 * l, 2.0 * l2, -6.0 * l, 4.0 * l2,
    ) * k
}

/// Consistent translational mass of a Hermite element on `(w1, θ1, w2, θ2)`.
pub fn hermite_mass(mass_per_length: f64, l: f64) -> Matrix4<f64> {
    let m = mass_per_length * l / 420.0;
    let l2 = l * l;
    Matrix4::new(
        156.0, 22.0 * l, 54.0, -13.0 * l,
        22.0 * l, 4.0 * l2, 13.0 * l, -3.0 * l2,
        54.0, 13.0 * l, 156.0, -22.0 * l,
        -13.0 * l, -3.0 * l2, -22.0 * l, 4.0 * l2,
    ) * m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrillageNode {
    pub id: usize,
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrillageElement {
    pub nodes: [usize; 2],
    pub ei: f64,
    #[serde(default)]
    pub gj: f64,
    pub mass_per_length: f64,
    /// Rotary (polar) mass moment per unit length for torsion.
    #[serde(default)]
    pub polar_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrillageSupport {
    pub node: usize,
    /// Restrained dofs; `uz`, `rx`, `ry`.
    pub fix: Vec<Direction>,
}

/// Plane frame of beams loaded out of plane.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grillage {
    pub nodes: Vec<GrillageNode>,
    pub elements: Vec<GrillageElement>,
    #[serde(default)]
    pub supports: Vec<GrillageSupport>,
    /// Statically condense all slopes onto the vertical dofs.
    #[serde(default)]
    pub condense_rotations: bool,
}

fn direction_slot(d: Direction) -> Result<usize> {
    match d {
        Direction::Uz => Ok(0),
        Direction::Ry => Ok(1),
        Direction::Rx => Ok(2),
        Direction::Human => Err(Error::InvalidParameter("supports cannot restrain spectator dofs".into())),
    }
}

const SLOT_DIRECTIONS: [Direction; 3] = [Direction::Uz, Direction::Ry, Direction::Rx];

/// Assembles a grillage into a structural model with zero damping.
pub fn build_grillage(g: &Grillage) -> Result<StructuralModel> {
    if g.nodes.is_empty() || g.elements.is_empty() {
        return Err(Error::InvalidParameter("grillage needs nodes and elements".into()));
    }
    let mut index = HashMap::new();
    for (i, n) in g.nodes.iter().enumerate() {
        if !(n.x.is_finite() && n.y.is_finite()) {
            return Err(Error::InvalidParameter(format!("node {} has non-finite coordinates", n.id)));
        }
        if index.insert(n.id, i).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate node id {}", n.id)));
        }
    }
    let node_of = |id: usize| index.get(&id).copied().ok_or_else(|| Error::InvalidParameter(format!("unknown node id {id}")));

    let n_full = 3 * g.nodes.len();
    let mut k = DMatrix::zeros(n_full, n_full);
    let mut m = DMatrix::zeros(n_full, n_full);
    let mut total_mass = 0.0;
    for (e, el) in g.elements.iter().enumerate() {
        let (a, b) = (node_of(el.nodes[0])?, node_of(el.nodes[1])?);
        let (dx, dy) = (g.nodes[b].x - g.nodes[a].x, g.nodes[b].y - g.nodes[a].y);
        let l = dx.hypot(dy);
        if !(l > 0.0) {
            return Err(Error::InvalidParameter(format!("element {e} has zero length")));
        }
        if !(el.ei > 0.0) || !(el.mass_per_length > 0.0) || el.gj < 0.0 || el.polar_mass < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "element {e} needs positive ei and mass_per_length and non-negative gj and polar_mass"
            )));
        }
        total_mass += el.mass_per_length * l;
        let (ke, me) = element_matrices(el, l, dx / l, dy / l);
        let dofs = [3 * a, 3 * a + 1, 3 * a + 2, 3 * b, 3 * b + 1, 3 * b + 2];
        for i in 0..6 {
            for j in 0..6 {
                k[(dofs[i], dofs[j])] += ke[(i, j)];
                m[(dofs[i], dofs[j])] += me[(i, j)];
            }
        }
    }

    let mut restrained = vec![false; n_full];
    for s in &g.supports {
        let node = node_of(s.node)?;
        for &d in &s.fix {
            restrained[3 * node + direction_slot(d)?] = true;
        }
    }
    // unconnected slope dofs carry neither stiffness nor mass
    for i in 0..n_full {
        if i % 3 != 0 && k[(i, i)] == 0.0 && m[(i, i)] == 0.0 {
            restrained[i] = true;
        }
    }
    let free: Vec<usize> = (0..n_full).filter(|&i| !restrained[i]).collect();
    if free.is_empty() {
        return Err(Error::InvalidParameter("all dofs are restrained".into()));
    }
    let label_of = |i: usize| DofLabel::new(g.nodes[i / 3].id, SLOT_DIRECTIONS[i % 3]);

    let mut kf = k.select_rows(&free).select_columns(&free);
    let mut mf = m.select_rows(&free).select_columns(&free);
    symmetrize(&mut kf);
    symmetrize(&mut mf);
    let mut labels: Vec<DofLabel> = free.iter().map(|&i| label_of(i)).collect();

    if g.condense_rotations {
        let masters: Vec<usize> = (0..free.len()).filter(|&i| labels[i].direction == Direction::Uz).collect();
        let slaves: Vec<usize> = (0..free.len()).filter(|&i| labels[i].direction != Direction::Uz).collect();
        if masters.is_empty() {
            return Err(Error::InvalidParameter("no free vertical dofs to condense onto".into()));
        }
        if !slaves.is_empty() {
            let (kc, mc) = guyan(&kf, &mf, &masters, &slaves)?;
            kf = kc;
            mf = mc;
            labels = masters.iter().map(|&i| labels[i]).collect();
        }
    }

    let n = kf.nrows();
    StructuralModel::new(mf, DMatrix::zeros(n, n), kf, labels, total_mass)
}

fn element_matrices(el: &GrillageElement, l: f64, cx: f64, cy: f64) -> (Matrix6, Matrix6) {
    // local order (w1, slope1, twist1, w2, slope2, twist2)
    let kb = hermite_stiffness(el.ei, l);
    let mb = hermite_mass(el.mass_per_length, l);
    let bend = [0, 1, 3, 4];
    let mut kl = Matrix6::zeros();
    let mut ml = Matrix6::zeros();
    for i in 0..4 {
        for j in 0..4 {
            kl[(bend[i], bend[j])] = kb[(i, j)];
            ml[(bend[i], bend[j])] = mb[(i, j)];
        }
    }
    let kt = el.gj / l;
    let mt = el.polar_mass * l / 6.0;
    for (i, j, ks, ms) in [(2, 2, 1.0, 2.0), (5, 5, 1.0, 2.0), (2, 5, -1.0, 1.0), (5, 2, -1.0, 1.0)] {
        kl[(i, j)] = ks * kt;
        ml[(i, j)] = ms * mt;
    }
    // global (w, ∂w/∂x, ∂w/∂y) -> local (w, slope along element, slope across it)
    let mut t = Matrix6::zeros();
    for o in [0, 3] {
        t[(o, o)] = 1.0;
        t[(o + 1, o + 1)] = cx;
        t[(o + 1, o + 2)] = cy;
        t[(o + 2, o + 1)] = -cy;
        t[(o + 2, o + 2)] = cx;
    }
    (t.transpose() * kl * t, t.transpose() * ml * t)
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let s = (&*a + a.transpose()) * 0.5;
    *a = s;
}

/// Static (Guyan) condensation of `slaves` onto `masters`.
fn guyan(k: &DMatrix<f64>, m: &DMatrix<f64>, masters: &[usize], slaves: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let kss = k.select_rows(slaves).select_columns(slaves);
    let ksm = k.select_rows(slaves).select_columns(masters);
    let kmm = k.select_rows(masters).select_columns(masters);
    let mss = m.select_rows(slaves).select_columns(slaves);
    let msm = m.select_rows(slaves).select_columns(masters);
    let mmm = m.select_rows(masters).select_columns(masters);
    let chol = kss
        .cholesky()
        .ok_or_else(|| Error::SingularStiffness("rotational stiffness block is singular; cannot condense".into()))?;
    let x = chol.solve(&ksm);
    let mut kc = kmm - ksm.transpose() * &x;
    let mut mc = mmm - msm.transpose() * &x - x.transpose() * &msm + x.transpose() * mss * &x;
    symmetrize(&mut kc);
    symmetrize(&mut mc);
    Ok((kc, mc))
}

/// Boundary conditions of a straight beam.
#[derive(Clone, Debug, PartialEq)]
pub enum BeamSupports {
    /// Pinned at both ends.
    SimplySupported,
    /// Clamped at `x = 0`, free at the tip.
    Cantilever,
    /// Clamped at both ends.
    Fixed,
    /// `(node, restrain displacement, restrain rotation)` triples.
    Custom(Vec<(usize, bool, bool)>),
}

/// Uniform beam of `n_elements` Hermite elements; nodes `0..=n_elements`
/// at equal spacing along x.
pub fn build_beam(length: f64, ei: f64, mass_per_length: f64, n_elements: usize, supports: BeamSupports) -> Result<StructuralModel> {
    if n_elements < 2 {
        return Err(Error::InvalidParameter(format!("beam needs at least 2 elements, got {n_elements}")));
    }
    if !(length > 0.0 && ei > 0.0 && mass_per_length > 0.0) {
        return Err(Error::InvalidParameter("beam length, EI and mass per length must be positive".into()));
    }
    let last = n_elements;
    let fixes: Vec<(usize, bool, bool)> = match supports {
        BeamSupports::SimplySupported => vec![(0, true, false), (last, true, false)],
        BeamSupports::Cantilever => vec![(0, true, true)],
        BeamSupports::Fixed => vec![(0, true, true), (last, true, true)],
        BeamSupports::Custom(v) => v,
    };
    let dx = length / n_elements as f64;
    let g = Grillage {
        nodes: (0..=n_elements).map(|i| GrillageNode { id: i, x: i as f64 * dx, y: 0.0 }).collect(),
        elements: (0..n_elements)
            .map(|i| GrillageElement {
                nodes: [i, i + 1],
                ei,
                gj: 0.0,
                mass_per_length,
                polar_mass: 0.0,
            })
            .collect(),
        supports: fixes
            .into_iter()
            .map(|(node, w, r)| {
                if node > last {
                    return Err(Error::InvalidParameter(format!("support node {node} beyond beam end {last}")));
                }
                let mut fix = Vec::new();
                if w {
                    fix.push(Direction::Uz);
                }
                if r {
                    fix.push(Direction::Ry);
                }
                Ok(GrillageSupport { node, fix })
            })
            .collect::<Result<_>>()?,
        condense_rotations: false,
    };
    build_grillage(&g)
}
