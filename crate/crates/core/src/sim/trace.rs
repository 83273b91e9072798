use rand::Rng;

use crate::error::{Error, Result};
use crate::model::VehicleId;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub vehicle: VehicleId,
    pub x: f64,
    pub y: f64,
}

impl TracePoint {
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Vehicle positions per time step. Each step lists its vehicles sorted by
/// id; vehicles may appear and disappear between steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MobilityTrace {
    steps: Vec<Vec<TracePoint>>,
    step_duration_s: f64,
}

impl MobilityTrace {
    pub fn new(steps: Vec<Vec<TracePoint>>, step_duration_s: f64) -> Self {
        MobilityTrace { steps, step_duration_s }
    }

    pub fn steps(&self) -> &[Vec<TracePoint>] {
        &self.steps
    }

    pub fn step(&self, t: usize) -> &[TracePoint] {
        self.steps.get(t).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn step_duration_s(&self) -> f64 {
        self.step_duration_s
    }

    pub fn num_records(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticTrace {
    pub area_m: (f64, f64),
    pub num_vehicles: usize,
    pub steps: usize,
    pub speed_mps: f64,
    pub step_duration_s: f64,
}

/// Random-waypoint mobility: every vehicle starts at a uniform position,
/// heads for a uniform waypoint at constant speed and draws a new waypoint
/// on arrival. All vehicles are present at every step.
pub fn gen_synthetic(params: &SyntheticTrace, seed: u64) -> Result<MobilityTrace> {
    let (w, h) = params.area_m;
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(Error::InvalidInput(format!("area must be positive, got {w} x {h}")));
    }
    if !(params.speed_mps >= 0.0 && params.step_duration_s > 0.0) {
        return Err(Error::InvalidInput("speed must be non-negative and step duration positive".into()));
    }
    let mut rng = stream(seed, Stream::Trace);
    let point = |rng: &mut rand_chacha::ChaCha8Rng| (rng.random_range(0.0..=w), rng.random_range(0.0..=h));
    let mut pos: Vec<(f64, f64)> = (0..params.num_vehicles).map(|_| point(&mut rng)).collect();
    let mut goal: Vec<(f64, f64)> = (0..params.num_vehicles).map(|_| point(&mut rng)).collect();
    let budget = params.speed_mps * params.step_duration_s;

    let mut steps = Vec::with_capacity(params.steps);
    for t in 0..params.steps {
        if t > 0 {
            for (p, g) in pos.iter_mut().zip(goal.iter_mut()) {
                let mut left = budget;
                loop {
                    let d = (g.0 - p.0).hypot(g.1 - p.1);
                    if d > left {
                        p.0 += (g.0 - p.0) * left / d;
                        p.1 += (g.1 - p.1) * left / d;
                        break;
                    }
                    *p = *g;
                    left -= d;
                    *g = point(&mut rng);
                    if left <= 0.0 {
                        break;
                    }
                }
            }
        }
        steps.push(
            pos.iter()
                .enumerate()
                .map(|(i, &(x, y))| TracePoint { vehicle: VehicleId(i as u32), x, y })
                .collect(),
        );
    }
    Ok(MobilityTrace::new(steps, params.step_duration_s))
}
