//! Per-thread operation counters for the group arithmetic.
//!
//! Every backend reports the operations it performs through [`record`].
//! Only three operations enter the cost taxonomy: exponentiations and
//! multiplications in the source group and pairings. Hashing to the group,
//! scalar inversion and target-group work are tallied separately as
//! auxiliary operations.
//!
//! Counters live in thread-local storage so concurrent measurements on
//! different threads never interfere. A measurement scope is opened with
//! [`measure`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

/// A counted operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    /// Exponentiation in a source group.
    Exp,
    /// Multiplication or division in a source group.
    Mul,
    /// Bilinear map evaluation.
    Pairing,
    /// Hash of a byte string onto the first source group.
    HashToGroup,
    /// Inversion in the scalar field.
    ScalarInversion,
    /// Inversion in a source group.
    GroupInversion,
    /// Comparison of two target-group values.
    GtCompare,
    /// Multiplication or exponentiation in the target group.
    GtArith,
}

impl Op {
    /// Whether the operation belongs to the E/M/P taxonomy.
    pub fn is_primary(self) -> bool {
        matches!(self, Op::Exp | Op::Mul | Op::Pairing)
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Exp => "exp",
            Op::Mul => "mul",
            Op::Pairing => "pairing",
            Op::HashToGroup => "hash_to_group",
            Op::ScalarInversion => "scalar_inversion",
            Op::GroupInversion => "group_inversion",
            Op::GtCompare => "gt_compare",
            Op::GtArith => "gt_arith",
        }
    }
}

/// Counts collected over one measurement scope.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub exps: u64,
    pub muls: u64,
    pub pairings: u64,
    /// Operations excluded from the E/M/P taxonomy, keyed by [`Op::name`].
    pub aux: BTreeMap<&'static str, u64>,
}

impl OpCounters {
    fn bump(&mut self, op: Op) {
        match op {
            Op::Exp => self.exps += 1,
            Op::Mul => self.muls += 1,
            Op::Pairing => self.pairings += 1,
            other => *self.aux.entry(other.name()).or_insert(0) += 1,
        }
    }

    pub fn aux_count(&self, op: Op) -> u64 {
        self.aux.get(op.name()).copied().unwrap_or(0)
    }

    /// Difference `self - earlier`, assuming `earlier` is a prefix snapshot.
    fn since(&self, earlier: &OpCounters) -> OpCounters {
        let mut aux = BTreeMap::new();
        for (k, v) in &self.aux {
            let d = v - earlier.aux.get(k).copied().unwrap_or(0);
            if d > 0 {
                aux.insert(*k, d);
            }
        }
        OpCounters {
            exps: self.exps - earlier.exps,
            muls: self.muls - earlier.muls,
            pairings: self.pairings - earlier.pairings,
            aux,
        }
    }
}

impl fmt::Display for OpCounters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}E + {}M + {}P", self.exps, self.muls, self.pairings)?;
        for (k, v) in &self.aux {
            write!(f, " [{k}={v}]")?;
        }
        Ok(())
    }
}

thread_local! {
    static COUNTERS: RefCell<OpCounters> = RefCell::new(OpCounters::default());
}

/// Records one occurrence of `op` on the current thread.
#[inline]
pub fn record(op: Op) {
    COUNTERS.with(|c| c.borrow_mut().bump(op));
}

/// Runs `f` and returns its result with the operations it performed.
///
/// Scopes nest: an outer scope sees everything an inner scope saw.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, OpCounters) {
    let before = COUNTERS.with(|c| c.borrow().clone());
    let out = f();
    let after = COUNTERS.with(|c| c.borrow().clone());
    (out, after.since(&before))
}
