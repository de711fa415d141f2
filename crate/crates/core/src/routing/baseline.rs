//! Static unicast paths used by the virtual-channel baseline network.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{xy_route, yx_route};
use crate::model::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BaselineRouting {
    /// Dimension order, X then Y.
    Dor,
    /// X-Y or Y-X, alternating on injection-cycle parity.
    Xyyx,
    /// X-Y to a random node of the minimal rectangle, then X-Y onward.
    Romm,
    /// Minimal adaptive; chosen hop by hop inside the simulator.
    Mad,
}

impl BaselineRouting {
    pub const ALL: [BaselineRouting; 4] =
        [BaselineRouting::Dor, BaselineRouting::Xyyx, BaselineRouting::Romm, BaselineRouting::Mad];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineRouting::Dor => "dor",
            BaselineRouting::Xyyx => "xyyx",
            BaselineRouting::Romm => "romm",
            BaselineRouting::Mad => "mad",
        }
    }
}

/// Static path for one packet, or `None` for the adaptive algorithm.
pub fn baseline_path<R: Rng>(
    alg: BaselineRouting,
    src: NodeId,
    dst: NodeId,
    inject_cycle: u64,
    rng: &mut R,
) -> Option<Vec<NodeId>> {
    match alg {
        BaselineRouting::Dor => Some(xy_route(src, dst)),
        BaselineRouting::Xyyx => {
            Some(if inject_cycle.is_multiple_of(2) { xy_route(src, dst) } else { yx_route(src, dst) })
        }
        BaselineRouting::Romm => {
            let mid = NodeId::new(
                rng.gen_range(src.x.min(dst.x)..=src.x.max(dst.x)),
                rng.gen_range(src.y.min(dst.y)..=src.y.max(dst.y)),
            );
            let mut path = xy_route(src, mid);
            path.extend(xy_route(mid, dst).into_iter().skip(1));
            Some(path)
        }
        BaselineRouting::Mad => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::manhattan;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n(x: u16, y: u16) -> NodeId {
        NodeId::new(x, y)
    }

    #[test]
    fn dor_is_xy() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = baseline_path(BaselineRouting::Dor, n(0, 0), n(2, 1), 0, &mut rng).unwrap();
        assert_eq!(p, vec![n(0, 0), n(1, 0), n(2, 0), n(2, 1)]);
    }

    #[test]
    fn xyyx_alternates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let even = baseline_path(BaselineRouting::Xyyx, n(0, 0), n(2, 1), 4, &mut rng).unwrap();
        let odd = baseline_path(BaselineRouting::Xyyx, n(0, 0), n(2, 1), 5, &mut rng).unwrap();
        assert_eq!(even, vec![n(0, 0), n(1, 0), n(2, 0), n(2, 1)]);
        assert_eq!(odd, vec![n(0, 0), n(0, 1), n(1, 1), n(2, 1)]);
    }

    #[test]
    fn romm_is_minimal_and_contained() {
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = baseline_path(BaselineRouting::Romm, n(0, 0), n(2, 2), 0, &mut rng).unwrap();
            assert_eq!(p.len() - 1, 4);
            assert!(p.windows(2).all(|w| manhattan(w[0], w[1]) == 1));
            assert!(p.iter().all(|v| v.x <= 2 && v.y <= 2));
        }
    }

    #[test]
    fn mad_has_no_static_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(baseline_path(BaselineRouting::Mad, n(0, 0), n(1, 1), 0, &mut rng).is_none());
    }
}
