//! Named parameter bundles with the numbers they are known to produce.

use crate::codec::SchemeParams;
use crate::rational::{int, ratio, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PresetKind {
    /// A full simulation with its exact latency and load.
    Simulate {
        params: SchemeParams,
        latency: Rational,
        load: Rational,
        coded_symbols: usize,
        uncoded_symbols: usize,
    },
    /// A tradeoff curve with its end points `(q, L)`.
    Tradeoff {
        servers: usize,
        storage: Rational,
        outputs: usize,
        endpoints: [(usize, Rational); 2],
        /// Upper limit on the largest gap ratio, when one applies.
        max_gap: Option<Rational>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub kind: PresetKind,
}

pub fn all() -> Vec<Preset> {
    vec![
        Preset {
            name: "min-bandwidth-example",
            description: "K=4 waiting for all servers, mu=1/2, m=12, N=4",
            kind: PresetKind::Simulate {
                params: SchemeParams::new(4, 4, ratio(1, 2), 12, 4, 4),
                latency: ratio(37, 6),
                load: int(1),
                coded_symbols: 12,
                uncoded_symbols: 0,
            },
        },
        Preset {
            name: "min-latency-example",
            description: "K=4 waiting for 2 servers, mu=1/2, m=12, N=4",
            kind: PresetKind::Simulate {
                params: SchemeParams::new(4, 2, ratio(1, 2), 12, 4, 4),
                latency: ratio(19, 6),
                load: int(2),
                coded_symbols: 0,
                uncoded_symbols: 24,
            },
        },
        Preset {
            name: "sec4-example",
            description: "K=6, q=4, mu=1/2, m=20, n=4, N=12",
            kind: PresetKind::Simulate {
                params: SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12),
                latency: ratio(117, 10),
                load: ratio(21, 5),
                coded_symbols: 36,
                uncoded_symbols: 48,
            },
        },
        Preset {
            name: "k14-half-storage",
            description: "tradeoff for K=14, mu=1/2, N=840",
            kind: PresetKind::Tradeoff {
                servers: 14,
                storage: ratio(1, 2),
                outputs: 840,
                endpoints: [(2, int(420)), (14, int(60))],
                max_gap: None,
            },
        },
        Preset {
            name: "k18-third-storage",
            description: "tradeoff and lower bound for K=18, mu=1/3, N=180",
            kind: PresetKind::Tradeoff {
                servers: 18,
                storage: ratio(1, 3),
                outputs: 180,
                endpoints: [(3, int(120)), (18, int(20))],
                max_gap: Some(ratio(21, 5)),
            },
        },
    ]
}

pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    all().iter().map(|p| p.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for p in all() {
            if let PresetKind::Simulate { params, .. } = &p.kind {
                params.validate().unwrap();
            }
        }
        assert!(find("sec4-example").is_some());
        assert!(find("nope").is_none());
        assert_eq!(names().len(), 5);
    }
}
