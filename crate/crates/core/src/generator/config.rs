use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ast::{BinOp, ScalarType, UnOp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("`{0}` must be at least 1")]
    ZeroLimit(&'static str),
    #[error("probability `{name}` = {value} is outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("assignment weight must be positive: it is the only statement kind usable at maximum depth")]
    NoAssignments,
    #[error("no arithmetic operator has positive weight under the enabled features")]
    NoOperators,
    #[error("no comparison operator has positive weight, so no condition can be built")]
    NoComparisons,
    #[error("empty literal range for {0}")]
    BadLiteralRange(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeUniverse {
    All,
    IntOnly,
    FloatOnly,
}

impl TypeUniverse {
    pub fn types(self) -> Vec<ScalarType> {
        match self {
            TypeUniverse::All => ScalarType::INTEGERS.iter().chain(&ScalarType::FLOATS).copied().collect(),
            TypeUniverse::IntOnly => ScalarType::INTEGERS.to_vec(),
            TypeUniverse::FloatOnly => ScalarType::FLOATS.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StmtWeights {
    pub assign: u32,
    pub branch: u32,
    pub loop_: u32,
    pub map_reduce: u32,
}

impl Default for StmtWeights {
    fn default() -> Self {
        StmtWeights { assign: 6, branch: 2, loop_: 1, map_reduce: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpWeights {
    pub binary: BTreeMap<BinOp, u32>,
    pub unary: BTreeMap<UnOp, u32>,
}

impl Default for OpWeights {
    /// Plain arithmetic is four times as likely as any bitwise or shift
    /// operator. Comparisons and `&&`/`||` only occur in conditions.
    fn default() -> Self {
        let binary = BinOp::ALL
            .iter()
            .map(|&op| {
                let w = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => 4,
                    BinOp::Rem => 2,
                    op if op.is_bitwise() => 1,
                    BinOp::LogAnd | BinOp::LogOr => 1,
                    _ => 2,
                };
                (op, w)
            })
            .collect();
        let unary = [(UnOp::Neg, 1), (UnOp::BitNot, 1), (UnOp::LogNot, 1)].into_iter().collect();
        OpWeights { binary, unary }
    }
}

impl OpWeights {
    pub fn binary(&self, op: BinOp) -> u32 {
        self.binary.get(&op).copied().unwrap_or(0)
    }

    pub fn unary(&self, op: UnOp) -> u32 {
        self.unary.get(&op).copied().unwrap_or(0)
    }
}

/// Inclusive literal bounds per type kind, clamped to each concrete type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiteralRanges {
    pub signed: (i64, i64),
    pub unsigned: (u64, u64),
    pub float: (f64, f64),
}

impl Default for LiteralRanges {
    fn default() -> Self {
        LiteralRanges { signed: (i64::MIN, i64::MAX), unsigned: (0, u64::MAX), float: (-1e6, 1e6) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub max_block_stmts: usize,
    pub max_stmt_depth: usize,
    pub max_expr_depth: usize,
    /// Overall statement budget for the function body.
    pub max_total_stmts: usize,
    pub allow_loops: bool,
    pub allow_for_loops: bool,
    pub allow_bitwise: bool,
    pub allow_division: bool,
    pub type_universe: TypeUniverse,
    pub stmt_weights: StmtWeights,
    pub op_weights: OpWeights,
    /// Probability that a variable leaf introduces a new variable.
    pub fresh_var_prob: f64,
    /// Probability that an expression leaf is a literal.
    pub literal_leaf_prob: f64,
    pub literal_ranges: LiteralRanges,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            max_block_stmts: 8,
            max_stmt_depth: 3,
            max_expr_depth: 3,
            max_total_stmts: 120,
            allow_loops: true,
            allow_for_loops: true,
            allow_bitwise: true,
            allow_division: true,
            type_universe: TypeUniverse::All,
            stmt_weights: StmtWeights::default(),
            op_weights: OpWeights::default(),
            fresh_var_prob: 0.2,
            literal_leaf_prob: 0.2,
            literal_ranges: LiteralRanges::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(seed: u64) -> Self {
        GeneratorConfig { seed, ..Self::default() }
    }

    pub fn op_enabled(&self, op: BinOp) -> bool {
        (self.allow_bitwise || !op.is_bitwise()) && (self.allow_division || !op.is_division())
    }

    pub fn unary_enabled(&self, op: UnOp) -> bool {
        self.allow_bitwise || op != UnOp::BitNot
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_block_stmts == 0 {
            return Err(ConfigError::ZeroLimit("max_block_stmts"));
        }
        if self.max_stmt_depth == 0 {
            return Err(ConfigError::ZeroLimit("max_stmt_depth"));
        }
        if self.max_expr_depth == 0 {
            return Err(ConfigError::ZeroLimit("max_expr_depth"));
        }
        for (name, value) in [("fresh_var_prob", self.fresh_var_prob), ("literal_leaf_prob", self.literal_leaf_prob)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::BadProbability { name, value });
            }
        }
        if self.stmt_weights.assign == 0 {
            return Err(ConfigError::NoAssignments);
        }
        let arithmetic =
            BinOp::ALL.iter().any(|&op| op.is_arithmetic() && self.op_enabled(op) && self.op_weights.binary(op) > 0);
        if !arithmetic {
            return Err(ConfigError::NoOperators);
        }
        if !BinOp::ALL.iter().any(|&op| op.is_comparison() && self.op_weights.binary(op) > 0) {
            return Err(ConfigError::NoComparisons);
        }
        let r = &self.literal_ranges;
        if r.signed.0 > r.signed.1 {
            return Err(ConfigError::BadLiteralRange("signed"));
        }
        if r.unsigned.0 > r.unsigned.1 {
            return Err(ConfigError::BadLiteralRange("unsigned"));
        }
        if !r.float.0.is_finite() || !r.float.1.is_finite() || r.float.0 > r.float.1 {
            return Err(ConfigError::BadLiteralRange("float"));
        }
        Ok(())
    }

    /// Short digest of every setting except the seed.
    pub fn config_hash(&self) -> String {
        let unseeded = GeneratorConfig { seed: 0, ..self.clone() };
        let json = serde_json::to_string(&unseeded).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    /// One-line summary of the non-default-sensitive knobs, for file headers.
    pub fn summary(&self) -> String {
        let types = match self.type_universe {
            TypeUniverse::All => "all",
            TypeUniverse::IntOnly => "int-only",
            TypeUniverse::FloatOnly => "float-only",
        };
        format!(
            "seed={} types={} loops={} for-loops={} bitwise={} division={} max-block-stmts={} max-stmt-depth={} max-expr-depth={} max-total-stmts={} config={}",
            self.seed,
            types,
            self.allow_loops,
            self.allow_for_loops,
            self.allow_bitwise,
            self.allow_division,
            self.max_block_stmts,
            self.max_stmt_depth,
            self.max_expr_depth,
            self.max_total_stmts,
            self.config_hash(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        GeneratorConfig::default().validate().unwrap();
    }

    #[test]
    fn arithmetic_outweighs_bitwise() {
        let w = OpWeights::default();
        for op in [BinOp::Add, BinOp::Sub, BinOp::Mul] {
            for bit in [BinOp::BitAnd, BinOp::BitOr, BinOp::BitXor, BinOp::Shl, BinOp::Shr] {
                assert_eq!(w.binary(op), 4 * w.binary(bit));
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = GeneratorConfig::default();
        c.stmt_weights.assign = 0;
        assert_eq!(c.validate(), Err(ConfigError::NoAssignments));

        let mut c = GeneratorConfig::default();
        for op in [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem] {
            c.op_weights.binary.insert(op, 0);
        }
        c.allow_bitwise = false;
        assert_eq!(c.validate(), Err(ConfigError::NoOperators));
        c.allow_bitwise = true;
        assert!(c.validate().is_ok());

        let c = GeneratorConfig { max_expr_depth: 0, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::ZeroLimit(_))));
        let c = GeneratorConfig { fresh_var_prob: 1.5, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::BadProbability { .. })));
    }

    #[test]
    fn hash_ignores_seed() {
        let a = GeneratorConfig::with_seed(1);
        let b = GeneratorConfig::with_seed(2);
        assert_eq!(a.config_hash(), b.config_hash());
        let c = GeneratorConfig { allow_loops: false, ..a.clone() };
        assert_ne!(a.config_hash(), c.config_hash());
    }
}
