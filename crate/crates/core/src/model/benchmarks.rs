//! Built-in benchmark structures, in tonnes, kN, metres and seconds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    apply_rayleigh_damping, build_beam, build_grillage, build_sdof, vertical_modes, BeamSupports, CrowdLayout, DofLabel, Direction,
    Grillage, GrillageElement, GrillageNode, GrillageSupport, StructuralModel,
};
use crate::error::{Error, Result};

pub const BENCHMARK_NAMES: [&str; 3] = ["sdof_5hz", "beam_4seat", "stand_72seat"];

/// A structure with its seat dofs, a response dof of interest and a
/// half-active/half-passive crowd layout.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: &'static str,
    pub description: &'static str,
    /// Empty structure with Rayleigh (or modal) damping.
    pub model: StructuralModel,
    /// Seat dofs; one spectator per seat.
    pub seats: Vec<usize>,
    /// Dof reported by default.
    pub label_dof: usize,
    /// Half of the seats passive; equals the all-active layout when only one seat exists.
    pub mixed: CrowdLayout,
}

impl Benchmark {
    /// Every seat occupied by an active spectator.
    pub fn active_layout(&self) -> CrowdLayout {
        CrowdLayout::active_only(self.seats.clone())
    }

    pub fn label(&self) -> DofLabel {
        self.model.label(self.label_dof)
    }
}

pub fn benchmark(name: &str) -> Result<Benchmark> {
    match name {
        "sdof_5hz" => sdof_5hz(),
        "beam_4seat" => beam_4seat(),
        "stand_72seat" => stand_72seat(),
        other => Err(Error::InvalidParameter(format!(
            "unknown benchmark `{other}` (available: {})",
            BENCHMARK_NAMES.join(", ")
        ))),
    }
}

/// Unit-mass oscillator at 5 Hz with 7% damping and one seat.
pub fn sdof_5hz() -> Result<Benchmark> {
    let model = build_sdof(1.0, (2.0 * std::f64::consts::PI * 5.0).powi(2), 0.07)?;
    Ok(Benchmark {
        name: "sdof_5hz",
        description: "single-dof oscillator, m = 1 t, f1 = 5 Hz, damping ratio 0.07",
        model,
        seats: vec![0],
        label_dof: 0,
        mixed: CrowdLayout::active_only(vec![0]),
    })
}

/// Simply supported 10 m beam of 1.7 t with f1 = 7.5 Hz and four seats.
pub fn beam_4seat() -> Result<Benchmark> {
    let (length, mu, f1): (f64, f64, f64) = (10.0, 0.17, 7.5);
    let ei = (2.0 * f1 / std::f64::consts::PI).powi(2) * mu * length.powi(4);
    let beam = build_beam(length, ei, mu, 20, BeamSupports::SimplySupported)?;
    let model = apply_rayleigh_damping(beam, 0.05, 0.08, 0, 1)?;
    let seats: Vec<usize> = [4, 8, 12, 16]
        .iter()
        .map(|&n| model.dof_index(&DofLabel::new(n, Direction::Uz)).expect("seat node is free"))
        .collect();
    let label_dof = model.dof_index(&DofLabel::new(10, Direction::Uz)).expect("midspan node is free");
    Ok(Benchmark {
        name: "beam_4seat",
        description: "simply supported beam, L = 10 m, 1.7 t, f1 = 7.5 Hz, Rayleigh 0.05/0.08, seats at x = 2, 4, 6, 8 m",
        mixed: CrowdLayout::new(vec![seats[0], seats[1]], vec![seats[2], seats[3]]),
        model,
        seats,
        label_dof,
    })
}

const ROWS: usize = 6;
const SEATS_PER_ROW: usize = 12;
const RAKER_COLUMNS: [usize; 4] = [0, 4, 7, 11];
const ROW_SPACING: f64 = 0.8;

fn stand_grillage(stiffness_scale: f64) -> Grillage {
    let seat_id = |row: usize, col: usize| row * SEATS_PER_ROW + col;
    let support_id = |k: usize| ROWS * SEATS_PER_ROW + k;
    let mut nodes = Vec::new();
    for row in 0..ROWS {
        for col in 0..SEATS_PER_ROW {
            nodes.push(GrillageNode {
                id: seat_id(row, col),
                x: col as f64,
                y: ROW_SPACING * (row + 1) as f64,
            });
        }
    }
    for (k, &col) in RAKER_COLUMNS.iter().enumerate() {
        nodes.push(GrillageNode { id: support_id(k), x: col as f64, y: 0.0 });
    }
    let seat_beam = |a, b| GrillageElement {
        nodes: [a, b],
        ei: 2.0e4 * stiffness_scale,
        gj: 5.0e3 * stiffness_scale,
        mass_per_length: 0.2,
        polar_mass: 0.0,
    };
    let raker = |a, b| GrillageElement {
        nodes: [a, b],
        ei: 2.0e5 * stiffness_scale,
        gj: 5.0e4 * stiffness_scale,
        mass_per_length: 0.2,
        polar_mass: 0.0,
    };
    let mut elements = Vec::new();
    for row in 0..ROWS {
        for col in 0..SEATS_PER_ROW - 1 {
            elements.push(seat_beam(seat_id(row, col), seat_id(row, col + 1)));
        }
    }
    for (k, &col) in RAKER_COLUMNS.iter().enumerate() {
        elements.push(raker(support_id(k), seat_id(0, col)));
        for row in 0..ROWS - 1 {
            elements.push(raker(seat_id(row, col), seat_id(row + 1, col)));
        }
    }
    let supports = (0..RAKER_COLUMNS.len())
        .map(|k| GrillageSupport {
            node: support_id(k),
            fix: vec![Direction::Uz, Direction::Rx, Direction::Ry],
        })
        .collect();
    Grillage {
        nodes,
        elements,
        supports,
        condense_rotations: true,
    }
}

/// Cantilevered grandstand: six rows of twelve seats on four rakers,
/// about 17 t, f1 = 5 Hz, rotations condensed onto the 72 vertical dofs.
pub fn stand_72seat() -> Result<Benchmark> {
    let trial = build_grillage(&stand_grillage(1.0))?;
    let f = vertical_modes(&trial, 1)?[0].frequency;
    let grillage = stand_grillage((5.0 / f).powi(2));
    let model = apply_rayleigh_damping(build_grillage(&grillage)?, 0.05, 0.08, 0, 1)?;
    let seats: Vec<usize> = (0..ROWS * SEATS_PER_ROW)
        .map(|id| model.dof_index(&DofLabel::new(id, Direction::Uz)).expect("seat node is free"))
        .collect();
    let label_dof = model
        .dof_index(&DofLabel::new((ROWS - 1) * SEATS_PER_ROW + SEATS_PER_ROW / 2, Direction::Uz))
        .expect("back-row node is free");
    let mut shuffled = seats.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(72));
    let (passive, active) = shuffled.split_at(seats.len() / 2);
    let (mut active, mut passive) = (active.to_vec(), passive.to_vec());
    active.sort_unstable();
    passive.sort_unstable();
    Ok(Benchmark {
        name: "stand_72seat",
        description: "cantilevered grillage stand, 6 rows x 12 seats on 4 rakers, about 17 t, f1 = 5 Hz, Rayleigh 0.05/0.08",
        model,
        seats,
        label_dof,
        mixed: CrowdLayout::new(active, passive),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{attach_passive_crowd, modal_damping_ratio, BiodynamicModel};

    #[test]
    fn sdof_benchmark() {
        let b = benchmark("sdof_5hz").unwrap();
        assert!((vertical_modes(&b.model, 1).unwrap()[0].frequency - 5.0).abs() < 1e-12);
        assert_eq!(b.seats.len(), 1);
    }

    #[test]
    fn beam_benchmark() {
        let b = beam_4seat().unwrap();
        let modes = vertical_modes(&b.model, 2).unwrap();
        assert!((modes[0].frequency - 7.5).abs() < 0.01);
        assert!((modal_damping_ratio(&b.model, &modes[0]) - 0.05).abs() < 1e-10);
        assert!((modal_damping_ratio(&b.model, &modes[1]) - 0.08).abs() < 1e-10);
        assert_eq!(b.seats.len(), 4);
        assert_eq!(b.label().to_string(), "n10:uz");
        let gamma = b.mixed.mass_ratio(&b.model, &BiodynamicModel::coermann());
        assert!((gamma - 0.1014).abs() < 1e-3);
        let mixed = attach_passive_crowd(b.model.clone(), &b.mixed, &BiodynamicModel::coermann()).unwrap();
        assert_eq!(mixed.n_dof(), b.model.n_dof() + 2);
    }

    #[test]
    fn stand_benchmark() {
        let b = stand_72seat().unwrap();
        assert_eq!(b.model.n_dof(), 72);
        assert_eq!(b.seats.len(), 72);
        let f1 = vertical_modes(&b.model, 1).unwrap()[0].frequency;
        assert!((f1 - 5.0).abs() < 1e-6);
        assert!((b.model.structure_mass() - 17.04).abs() < 1e-9);
        assert_eq!(b.mixed.active.len(), 36);
        assert_eq!(b.mixed.passive.len(), 36);
        b.mixed.validate(&b.model).unwrap();
    }

    #[test]
    fn unknown_benchmark() {
        assert!(matches!(benchmark("bridge"), Err(Error::InvalidParameter(_))));
    }
}
