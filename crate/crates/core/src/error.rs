use thiserror::Error;

/// Violated model or scenario invariants, and failures of the pipeline
/// stages that consume them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol rate must be positive (got {0})")]
    NonPositiveSymbolRate(String),

    #[error("fill rate must lie in (0, 1] (got {0})")]
    FillRateOutOfRange(String),

    #[error("invalid MODCOD: {0}")]
    InvalidModCod(String),

    #[error("no MODCOD in the table supports SNR {0} dB")]
    NoModCodForSnr(f64),

    #[error("invalid orbit model: {0}")]
    InvalidOrbit(String),

    #[error("carrier 1 fill rate is zero")]
    ZeroFillRate,

    #[error(
        "carrier 1 must be dominant (capacity x fill rate), but alpha = {alpha} > 1; \
         swap carrier1 and carrier2"
    )]
    DominanceViolated { alpha: String },

    #[error("carrier 2 has zero usable capacity (alpha = 0)")]
    Carrier2Unusable,

    #[error("load-balancing factor {0} is outside (0, 1]")]
    AlphaOutOfRange(String),

    #[error("sequence denominator {0} exceeds 64; round alpha first")]
    DenominatorTooLarge(u32),

    #[error(
        "a {pdu_size_bytes}-byte PDU does not fit the per-FECFRAME share of {share_bytes} bytes"
    )]
    ZeroPayload {
        pdu_size_bytes: u32,
        share_bytes: f64,
    },

    #[error("PDU size must be positive")]
    ZeroPduSize,

    #[error("scenario has no PDUs")]
    NoTraffic,

    #[error("invalid burst gap {0} s")]
    InvalidGap(f64),

    #[error("sequence number {0} appears more than once")]
    DuplicateSeq(u64),

    #[error("sequence number {0} is missing")]
    MissingSeq(u64),

    #[error("throughput window has zero duration")]
    DegenerateWindow,

    #[error("stream is empty")]
    EmptyStream,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
