//! Resolution of a [`SequenceSpec`] into a fully concrete chain: fresh
//! parameters drawn from configured ranges, argv indices assigned, and a
//! unique name suffix allocated per item.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    char_literal_pool, is_char_literal, validate, BugKind, ConcreteParam, ConcreteTransformation,
    HoleFiller, InstantiatedSequence, Param, ParamValue, SequenceSpec, TransformationKind,
    TransformationSpec, Violation,
};

/// Name of the generator algorithm, recorded in every manifest.
pub const RNG_ALGORITHM: &str = "splitmix64";

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 stream. Chosen over an external RNG crate so that the draw
/// sequence is pinned by this crate alone and cannot drift with dependency
/// upgrades; batch manifests record the algorithm name.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derives an independent child seed for the record at `index`. Children
    /// start from mixed states, so their streams do not overlap shifted
    /// copies of each other.
    pub fn child_seed(seed: u64, index: u64) -> u64 {
        mix(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform draw in `[0, bound)` by rejection; `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let zone = (u64::MAX / bound) * bound;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// Uniform draw in the inclusive range `[lo, hi]`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = hi.wrapping_sub(lo) as u64;
        if span == u64::MAX {
            return self.next_u64() as i64;
        }
        lo.wrapping_add(self.below(span + 1) as i64)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }
}

/// Inclusive draw ranges for fresh parameters, one per (kind, slot) that can
/// be drawn. The defaults match the generation recipes used throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ranges {
    #[serde(rename = "IC.v2")]
    pub ic_v2: (i64, i64),
    /// Drawn as an integer and rendered as its canonical decimal string.
    #[serde(rename = "SC.s2")]
    pub sc_s2: (i64, i64),
    #[serde(rename = "FL.e")]
    pub fl_e: (i64, i64),
    #[serde(rename = "PC.n")]
    pub pc_n: (i64, i64),
    #[serde(rename = "CC.n")]
    pub cc_n: (i64, i64),
    /// Pool of characters `CC.c` draws from.
    #[serde(rename = "CC.c")]
    pub cc_chars: String,
}

impl Default for Ranges {
    fn default() -> Self {
        Ranges {
            ic_v2: (0, 255),
            sc_s2: (0, 255),
            fl_e: (0, 255),
            pc_n: (1, 20),
            cc_n: (1, 20),
            cc_chars: char_literal_pool().into_iter().collect(),
        }
    }
}

impl Ranges {
    /// Checks that every range is non-empty and the char pool admissible.
    pub fn check(&self) -> Result<(), InstantiateError> {
        let pairs = [
            ("IC.v2", self.ic_v2),
            ("SC.s2", self.sc_s2),
            ("FL.e", self.fl_e),
            ("PC.n", self.pc_n),
            ("CC.n", self.cc_n),
        ];
        for (name, (lo, hi)) in pairs {
            if lo > hi {
                return Err(InstantiateError::BadRange {
                    slot: name,
                    detail: format!("min {lo} exceeds max {hi}"),
                });
            }
        }
        if self.cc_chars.is_empty() {
            return Err(InstantiateError::BadRange {
                slot: "CC.c",
                detail: "empty character pool".into(),
            });
        }
        if let Some(bad) = self.cc_chars.chars().find(|&c| !is_char_literal(c)) {
            return Err(InstantiateError::BadRange {
                slot: "CC.c",
                detail: format!("character {bad:?} outside the admissible set"),
            });
        }
        Ok(())
    }
}

/// How argv indices are assigned to input parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArgvPolicy {
    /// Fresh input parameters get consecutive unused indices 1, 2, ...;
    /// explicitly written `argv[i]` references are kept. This is the default
    /// and gives every transformation its own argument.
    #[default]
    Distinct,
    /// Keep exactly what the spec wrote; fresh input parameters are an error
    /// because they have no binding.
    AsWritten,
}

#[derive(Debug, Error)]
pub enum InstantiateError {
    #[error("invalid sequence: {}", crate::model::join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("item {item}: input slot {slot} has no argv binding under the as-written policy")]
    MissingArgvBinding { item: usize, slot: &'static str },
    #[error("range {slot}: {detail}")]
    BadRange { slot: &'static str, detail: String },
    #[error("sequence length must be at least 1")]
    EmptyLength,
    #[error("kind set must be non-empty")]
    EmptyKinds,
}

/// Resolves every fresh parameter and assigns name suffixes. Deterministic:
/// the tuple (spec, ranges, seed, policy) fixes the result byte for byte
/// through emission.
pub fn instantiate(
    seq: &SequenceSpec,
    ranges: &Ranges,
    rng: &mut Rng,
    policy: ArgvPolicy,
) -> Result<InstantiatedSequence, InstantiateError> {
    let violations = validate(seq);
    if !violations.is_empty() {
        return Err(InstantiateError::Invalid(violations));
    }
    ranges.check()?;

    let used: std::collections::BTreeSet<u32> = seq
        .items
        .iter()
        .flat_map(|item| item.params.iter())
        .filter_map(|p| match p {
            Param::ArgvString(i) | Param::ArgvInt(i) => Some(*i),
            _ => None,
        })
        .collect();
    let mut next_index = 1u32;
    let mut take_fresh_index = move || {
        let mut candidate = next_index;
        while used.contains(&candidate) {
            candidate += 1;
        }
        next_index = candidate + 1;
        candidate
    };

    let mut items = Vec::with_capacity(seq.items.len());
    let mut argv_arity = 0u32;
    for (i, item) in seq.items.iter().enumerate() {
        let mut params = Vec::with_capacity(item.params.len());
        for (slot, param) in item.params.iter().enumerate() {
            let concrete = match param {
                Param::Literal(v) => ConcreteParam::Literal(v.clone()),
                Param::ArgvString(idx) => ConcreteParam::ArgvString(*idx),
                Param::ArgvInt(idx) => ConcreteParam::ArgvInt(*idx),
                Param::Fresh => {
                    if item.kind.input_slot() == Some(slot) {
                        match policy {
                            ArgvPolicy::Distinct => {
                                let idx = take_fresh_index();
                                if item.kind == TransformationKind::Ic {
                                    ConcreteParam::ArgvInt(idx)
                                } else {
                                    ConcreteParam::ArgvString(idx)
                                }
                            }
                            ArgvPolicy::AsWritten => {
                                return Err(InstantiateError::MissingArgvBinding {
                                    item: i,
                                    slot: item.kind.slot_name(slot),
                                })
                            }
                        }
                    } else {
                        draw(item.kind, slot, ranges, rng)
                    }
                }
            };
            if let Some(idx) = concrete.argv_index() {
                argv_arity = argv_arity.max(idx);
            }
            params.push(concrete);
        }
        items.push(ConcreteTransformation {
            kind: item.kind,
            params,
            holes: item.holes.clone(),
            suffix: (i + 1) as u32,
        });
    }
    Ok(InstantiatedSequence { items, argv_arity })
}

fn draw(kind: TransformationKind, slot: usize, ranges: &Ranges, rng: &mut Rng) -> ConcreteParam {
    use TransformationKind::*;
    let value = match (kind, slot) {
        (Ic, 1) => ParamValue::Int(rng.range_i64(ranges.ic_v2.0, ranges.ic_v2.1)),
        (Sc, 1) => ParamValue::Str(rng.range_i64(ranges.sc_s2.0, ranges.sc_s2.1).to_string()),
        (Fl, 0) => ParamValue::Int(rng.range_i64(ranges.fl_e.0, ranges.fl_e.1)),
        (Pc, 1) => ParamValue::Int(rng.range_i64(ranges.pc_n.0, ranges.pc_n.1)),
        (Cc, 1) => {
            let pool: Vec<char> = ranges.cc_chars.chars().collect();
            ParamValue::Char(*rng.pick(&pool))
        }
        (Cc, 2) => ParamValue::Int(rng.range_i64(ranges.cc_n.0, ranges.cc_n.1)),
        // Every slot is either an input slot (handled by the caller) or one
        // of the ranged slots above, so this arm is unreachable for
        // well-typed sequences.
        _ => unreachable!("no range for {kind} slot {slot}"),
    };
    ConcreteParam::Literal(value)
}

/// Builds an abstract random sequence: `length` kinds drawn uniformly (with
/// repetition), every parameter fresh, conditionals nesting through their
/// then-hole, and the bug in the innermost item.
pub fn random_sequence(
    length: usize,
    kinds: &[TransformationKind],
    rng: &mut Rng,
) -> Result<SequenceSpec, InstantiateError> {
    if length == 0 {
        return Err(InstantiateError::EmptyLength);
    }
    if kinds.is_empty() {
        return Err(InstantiateError::EmptyKinds);
    }
    let items = (0..length)
        .map(|i| {
            let kind = *rng.pick(kinds);
            single_item(kind, i + 1 == length, BugKind::Assert)
        })
        .collect();
    Ok(SequenceSpec { items })
}

/// One all-fresh application of `kind`: `NEXT` (or `FAIL` when last) in the
/// then/body hole, `SKIP` in the else hole.
pub fn single_item(kind: TransformationKind, last: bool, bug: BugKind) -> TransformationSpec {
    let params = vec![Param::Fresh; kind.param_types().len()];
    let first = if last {
        HoleFiller::Fail(bug)
    } else {
        HoleFiller::Next
    };
    let holes = if kind.hole_types().len() == 2 {
        vec![first, HoleFiller::Skip]
    } else {
        vec![first]
    };
    TransformationSpec {
        kind,
        params,
        holes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl;
    use crate::model::ALL_KINDS;

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 0, from the published SplitMix64 reference.
        let mut rng = Rng::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn child_seeds_differ_per_index() {
        let a = Rng::child_seed(7, 0);
        let b = Rng::child_seed(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, Rng::child_seed(7, 0));
    }

    #[test]
    fn range_draw_stays_inside_bounds() {
        let mut rng = Rng::new(3);
        for _ in 0..1000 {
            let v = rng.range_i64(-3, 17);
            assert!((-3..=17).contains(&v));
        }
    }

    #[test]
    fn fresh_int_parameter_lands_in_default_range() {
        let seq = dsl::parse("IC(atoll(argv[1]), ?, FAIL, SKIP)").unwrap();
        for seed in 0..50 {
            let mut rng = Rng::new(seed);
            let inst =
                instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
            match &inst.items[0].params[1] {
                ConcreteParam::Literal(ParamValue::Int(v)) => {
                    assert!((0..=255).contains(v), "drew {v}")
                }
                other => panic!("expected drawn literal, got {other:?}"),
            }
        }
    }

    #[test]
    fn determinism_same_seed_same_instance() {
        let seq = dsl::parse("CC(?, ?, ?, NEXT, SKIP) PC(?, ?, FAIL)").unwrap();
        let mut a = Rng::new(99);
        let mut b = Rng::new(99);
        let ranges = Ranges::default();
        let x = instantiate(&seq, &ranges, &mut a, ArgvPolicy::Distinct).unwrap();
        let y = instantiate(&seq, &ranges, &mut b, ArgvPolicy::Distinct).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn distinct_policy_assigns_consecutive_indices() {
        // Two input slots, both fresh: argv[1] to the first item, argv[2] to
        // the second. IC gets an integer-parsed reference.
        let seq = dsl::parse("IC(?, ?, NEXT, SKIP) SC(?, ?, FAIL, SKIP)").unwrap();
        let mut rng = Rng::new(0);
        let inst = instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
        assert_eq!(inst.items[0].params[0], ConcreteParam::ArgvInt(1));
        assert_eq!(inst.items[1].params[0], ConcreteParam::ArgvString(2));
        assert_eq!(inst.argv_arity, 2);
    }

    #[test]
    fn distinct_policy_keeps_explicit_indices() {
        let seq =
            dsl::parse("SC(argv[2], \"hello\", SKIP, NEXT) IC(atoll(argv[1]), 69, FAIL, { return 0; })")
                .unwrap();
        let mut rng = Rng::new(0);
        let inst = instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
        assert_eq!(inst.items[0].params[0], ConcreteParam::ArgvString(2));
        assert_eq!(inst.items[1].params[0], ConcreteParam::ArgvInt(1));
        assert_eq!(inst.argv_arity, 2);
    }

    #[test]
    fn fresh_indices_skip_explicit_ones() {
        let seq = dsl::parse("SC(argv[1], ?, NEXT, SKIP) SC(?, ?, FAIL, SKIP)").unwrap();
        let mut rng = Rng::new(0);
        let inst = instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
        assert_eq!(inst.items[1].params[0], ConcreteParam::ArgvString(2));
    }

    #[test]
    fn as_written_rejects_fresh_inputs() {
        let seq = dsl::parse("SC(?, ?, FAIL, SKIP)").unwrap();
        let mut rng = Rng::new(0);
        let err =
            instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::AsWritten).unwrap_err();
        assert!(matches!(
            err,
            InstantiateError::MissingArgvBinding { item: 0, slot: "s1" }
        ));
    }

    #[test]
    fn suffixes_are_one_based_item_positions() {
        let seq = dsl::parse("FL(?, NEXT) FL(?, NEXT) FL(?, FAIL)").unwrap();
        let mut rng = Rng::new(0);
        let inst = instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
        let suffixes: Vec<u32> = inst.items.iter().map(|i| i.suffix).collect();
        assert_eq!(suffixes, vec![1, 2, 3]);
        assert_eq!(inst.argv_arity, 0);
    }

    #[test]
    fn random_sequence_forced_shapes() {
        let mut rng = Rng::new(1);
        let seq = random_sequence(1, &[TransformationKind::Fl], &mut rng).unwrap();
        assert_eq!(dsl::print(&seq).unwrap(), "FL(?, FAIL)");

        let seq = random_sequence(3, &[TransformationKind::Ic], &mut rng).unwrap();
        assert_eq!(
            dsl::print(&seq).unwrap(),
            "IC(?, ?, NEXT, SKIP) IC(?, ?, NEXT, SKIP) IC(?, ?, FAIL, SKIP)"
        );

        assert!(matches!(
            random_sequence(0, &ALL_KINDS, &mut rng),
            Err(InstantiateError::EmptyLength)
        ));
    }

    #[test]
    fn sc_s2_draws_are_canonical_decimals() {
        let seq = dsl::parse("SC(argv[1], ?, FAIL, SKIP)").unwrap();
        for seed in 0..50 {
            let mut rng = Rng::new(seed);
            let inst =
                instantiate(&seq, &Ranges::default(), &mut rng, ArgvPolicy::Distinct).unwrap();
            match &inst.items[0].params[1] {
                ConcreteParam::Literal(ParamValue::Str(s)) => {
                    let n: i64 = s.parse().expect("decimal");
                    assert_eq!(&n.to_string(), s, "no leading zeros");
                    assert!((0..=255).contains(&n));
                }
                other => panic!("expected drawn string, got {other:?}"),
            }
        }
    }

    #[test]
    fn bad_ranges_are_rejected() {
        let ranges = Ranges {
            pc_n: (5, 2),
            ..Ranges::default()
        };
        let seq = dsl::parse("PC(argv[1], ?, FAIL)").unwrap();
        let mut rng = Rng::new(0);
        assert!(matches!(
            instantiate(&seq, &ranges, &mut rng, ArgvPolicy::Distinct),
            Err(InstantiateError::BadRange { slot: "PC.n", .. })
        ));
    }
}
