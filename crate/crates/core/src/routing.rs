//! Arc-to-leg decomposition, viable-arc enumeration and the leg transition
//! matrix used by transbot sequences.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{Instance, OperationId, StationId, StationKind, Time, ZoneId};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LegId(pub usize);

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// Pickup and dropoff station of an arc.
pub type ArcKey = (StationId, StationId);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leg {
    pub id: LegId,
    pub arc: ArcKey,
    /// 1 or 2.
    pub position: u8,
    pub pickup: StationId,
    pub dropoff: StationId,
    pub zone: ZoneId,
    pub travel: Time,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcSpec {
    pub pickup: StationId,
    pub dropoff: StationId,
    pub legs: Vec<Leg>,
    pub total_travel: Time,
}

impl ArcSpec {
    pub fn key(&self) -> ArcKey {
        (self.pickup, self.dropoff)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RoutingError {
    #[error("station {0} cannot be a pickup (only machines and the stocker can)")]
    BadPickup(StationId),
    #[error("station {0} cannot be a dropoff (only machines can)")]
    BadDropoff(StationId),
    #[error("unknown operation {0}")]
    UnknownOperation(OperationId),
    #[error("duplicate leg id {0}")]
    DuplicateLeg(LegId),
    #[error("leg ids are not dense: {0} is out of range")]
    SparseLeg(LegId),
}

struct LegShape {
    pickup: StationId,
    dropoff: StationId,
    zone: ZoneId,
}

fn shape_arc(
    instance: &Instance,
    pickup: StationId,
    dropoff: StationId,
) -> Result<Vec<LegShape>, RoutingError> {
    let kind = |s: StationId| instance.stations().get(s.0).map(|st| st.kind);
    match kind(dropoff) {
        Some(StationKind::Machine) => {}
        _ => return Err(RoutingError::BadDropoff(dropoff)),
    }
    let dropoff_zone = instance.station_zone(dropoff).expect("machine has a zone");
    match kind(pickup) {
        Some(StationKind::Stocker) => Ok(vec![LegShape {
            pickup,
            dropoff,
            zone: dropoff_zone,
        }]),
        Some(StationKind::Machine) => {
            if pickup == dropoff {
                return Ok(Vec::new());
            }
            let pickup_zone = instance.station_zone(pickup).expect("machine has a zone");
            if pickup_zone == dropoff_zone {
                Ok(vec![LegShape {
                    pickup,
                    dropoff,
                    zone: pickup_zone,
                }])
            } else {
                let h = instance.handoff();
                Ok(vec![
                    LegShape {
                        pickup,
                        dropoff: h,
                        zone: pickup_zone,
                    },
                    LegShape {
                        pickup: h,
                        dropoff,
                        zone: dropoff_zone,
                    },
                ])
            }
        }
        _ => Err(RoutingError::BadPickup(pickup)),
    }
}

/// Every arc from the stocker or a machine to a machine, decomposed once per
/// instance, with globally numbered legs.
#[derive(Clone, Debug)]
pub struct LegCatalog {
    arcs: BTreeMap<ArcKey, ArcSpec>,
    legs: Vec<Leg>,
}

impl LegCatalog {
    pub fn new(instance: &Instance) -> Self {
        let mut pickups: Vec<StationId> = vec![instance.stocker()];
        pickups.extend(instance.machines().map(|m| instance.machine_station(m)));
        pickups.sort();
        let mut dropoffs: Vec<StationId> =
            instance.machines().map(|m| instance.machine_station(m)).collect();
        dropoffs.sort();

        let mut arcs = BTreeMap::new();
        let mut legs = Vec::new();
        for &p in &pickups {
            for &d in &dropoffs {
                let shapes = shape_arc(instance, p, d).expect("enumerated arc endpoints are valid");
                let arc_legs: Vec<Leg> = shapes
                    .into_iter()
                    .enumerate()
                    .map(|(k, s)| Leg {
                        id: LegId(legs.len() + k),
                        arc: (p, d),
                        position: k as u8 + 1,
                        pickup: s.pickup,
                        dropoff: s.dropoff,
                        zone: s.zone,
                        travel: instance.travel(s.pickup, s.dropoff),
                    })
                    .collect();
                legs.extend(arc_legs.iter().cloned());
                let total_travel = arc_legs.iter().map(|l| l.travel).sum();
                arcs.insert(
                    (p, d),
                    ArcSpec {
                        pickup: p,
                        dropoff: d,
                        legs: arc_legs,
                        total_travel,
                    },
                );
            }
        }
        LegCatalog { arcs, legs }
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn leg(&self, id: LegId) -> Option<&Leg> {
        self.legs.get(id.0)
    }

    pub fn arc(&self, pickup: StationId, dropoff: StationId) -> Option<&ArcSpec> {
        self.arcs.get(&(pickup, dropoff))
    }

    pub fn arcs(&self) -> impl Iterator<Item = &ArcSpec> {
        self.arcs.values()
    }

    /// Viable arcs of `op`: stocker to each eligible machine for a first
    /// operation, otherwise every (predecessor machine, own machine) pair.
    pub fn viable_arcs(
        &self,
        instance: &Instance,
        op: OperationId,
    ) -> Result<Vec<&ArcSpec>, RoutingError> {
        let operation = instance
            .operation(op)
            .ok_or(RoutingError::UnknownOperation(op))?;
        let pred = instance
            .predecessor(op)
            .map_err(|_| RoutingError::UnknownOperation(op))?;
        let pickups: Vec<StationId> = match pred {
            None => vec![instance.stocker()],
            Some(p) => instance.operations()[p.0]
                .eligibility
                .keys()
                .map(|&m| instance.machine_station(m))
                .collect(),
        };
        let mut out = Vec::new();
        for &p in &pickups {
            for &m in operation.eligibility.keys() {
                let d = instance.machine_station(m);
                out.push(self.arc(p, d).expect("catalog covers all machine arcs"));
            }
        }
        Ok(out)
    }
}

/// Splits the transfer `pickup -> dropoff` into zone-bound legs.
pub fn decompose_arc(
    instance: &Instance,
    pickup: StationId,
    dropoff: StationId,
) -> Result<ArcSpec, RoutingError> {
    // Validate endpoints before building the catalog so errors name the caller's input.
    shape_arc(instance, pickup, dropoff)?;
    let catalog = LegCatalog::new(instance);
    Ok(catalog
        .arc(pickup, dropoff)
        .expect("validated endpoints are catalogued")
        .clone())
}

pub fn enumerate_arcs(instance: &Instance, op: OperationId) -> Result<Vec<ArcSpec>, RoutingError> {
    let catalog = LegCatalog::new(instance);
    Ok(catalog
        .viable_arcs(instance, op)?
        .into_iter()
        .cloned()
        .collect())
}

/// Deadhead times between legs: row dropoff to column pickup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegTransitionMatrix {
    entries: Vec<Vec<Time>>,
}

impl LegTransitionMatrix {
    pub fn get(&self, from: LegId, to: LegId) -> Time {
        self.entries[from.0][to.0]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rows(&self) -> &[Vec<Time>] {
        &self.entries
    }
}

pub fn build_leg_matrix(instance: &Instance, legs: &[Leg]) -> Result<LegTransitionMatrix, RoutingError> {
    let n = legs.len();
    let mut slots: Vec<Option<&Leg>> = vec![None; n];
    for leg in legs {
        let slot = slots.get_mut(leg.id.0).ok_or(RoutingError::SparseLeg(leg.id))?;
        if slot.is_some() {
            return Err(RoutingError::DuplicateLeg(leg.id));
        }
        *slot = Some(leg);
    }
    let ordered: Vec<&Leg> = slots.into_iter().map(|s| s.expect("dense")).collect();
    let entries = ordered
        .iter()
        .map(|from| {
            ordered
                .iter()
                .map(|to| instance.travel(from.dropoff, to.pickup))
                .collect()
        })
        .collect();
    Ok(LegTransitionMatrix { entries })
}
