//! User-terminal merger. Both carrier streams feed one FIFO: PDUs leave in
//! the order they arrive, with no resequencing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PduTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MergedEntry {
    pub merge_index: u64,
    #[serde(flatten)]
    pub trace: PduTrace,
}

/// Receiver output order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct MergedStream {
    entries: Vec<MergedEntry>,
}

impl MergedStream {
    pub fn entries(&self) -> &[MergedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn traces(&self) -> impl Iterator<Item = &PduTrace> + '_ {
        self.entries.iter().map(|e| &e.trace)
    }

    /// Sequence numbers in output order.
    pub fn order(&self) -> Vec<u64> {
        self.traces().map(|t| t.seq).collect()
    }
}

/// Merges per-carrier arrivals by arrival time (carrier 1 first on ties,
/// then lower sequence number). Sequence numbers must be exactly
/// `0..n`.
pub fn merge<'a, I>(traces: I) -> Result<MergedStream>
where
    I: IntoIterator<Item = &'a PduTrace>,
{
    let mut traces: Vec<PduTrace> = traces.into_iter().copied().collect();
    check_conservation(&traces)?;
    traces.sort_by_key(|t| (t.t_arrival, t.carrier, t.seq));
    let entries = traces
        .into_iter()
        .enumerate()
        .map(|(i, trace)| MergedEntry {
            merge_index: i as u64,
            trace,
        })
        .collect();
    Ok(MergedStream { entries })
}

fn check_conservation(traces: &[PduTrace]) -> Result<()> {
    let n = traces.len();
    let mut seen = vec![false; n];
    for t in traces {
        match seen.get_mut(t.seq as usize) {
            Some(slot) if *slot => return Err(Error::DuplicateSeq(t.seq)),
            Some(slot) => *slot = true,
            // out of range with n entries means some seq below n is absent
            None => continue,
        }
    }
    match seen.iter().position(|&s| !s) {
        Some(missing) => Err(Error::MissingSeq(missing as u64)),
        None => Ok(()),
    }
}
