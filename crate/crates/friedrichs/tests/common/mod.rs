#![allow(dead_code)]

use std::sync::Arc;

use friedrichs::boundary::{BoundaryCondition, FaceConditions};
use friedrichs::clifford::{dirac_system, CliffordRep};
use friedrichs::geometry::{Point, SpacetimeChart};
use friedrichs::linalg::{self, c, Vect, C64};
use friedrichs::reduction::FieldFn;
use friedrichs::system::FriedrichsSystem;

pub fn strip(n: usize, t1: f64) -> Arc<SpacetimeChart> {
    Arc::new(SpacetimeChart::minkowski_strip((0.0, t1), vec![1.0; n]).unwrap())
}

/// Smooth bump `exp(−1/(1−s²))` on `|s| < 1`.
pub fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

pub fn dirac_1d(t1: f64) -> (CliffordRep, FriedrichsSystem) {
    let rep = CliffordRep::build(2).unwrap();
    let sys = dirac_system(&rep, strip(1, t1), None).unwrap();
    (rep, sys)
}

pub fn advection(t1: f64) -> FriedrichsSystem {
    FriedrichsSystem::advection(strip(1, t1), 1.0).unwrap()
}

/// Zero inflow on the left, nothing imposed on the right.
pub fn inflow() -> FaceConditions {
    FaceConditions {
        lower: BoundaryCondition::new("dirichlet", vec![], Arc::new(|_| linalg::identity(1))),
        upper: BoundaryCondition::new("free", vec![], Arc::new(|_| linalg::zeros(1, 1))),
    }
}

pub fn field(f: impl Fn(&Point) -> Vec<C64> + Send + Sync + 'static) -> FieldFn {
    Arc::new(move |p| Vect::from_vec(f(p)))
}

pub fn real_field(f: impl Fn(&Point) -> Vec<f64> + Send + Sync + 'static) -> FieldFn {
    Arc::new(move |p| {
        let v = f(p);
        Vect::from_iterator(v.len(), v.into_iter().map(c))
    })
}
