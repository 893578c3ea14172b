//! Round and message records kept by every run.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::clock::Actor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// Host asks a guest for a proposal.
    Rfp,
    /// A proposed city and the proposer's saving.
    Proposal,
    /// Nothing to propose.
    Refusal,
    /// Cost figures for proposed cities or bundles.
    Costs,
    /// Outcome of an exchange.
    Decision,
    /// Host or CA opens a round.
    Announce,
    /// CA forwards all proposals.
    Broadcast,
    /// Cities handed to the CA.
    Endowment,
    /// Allocation and routes handed back by the CA.
    Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub round: usize,
    pub from: Actor,
    pub to: Actor,
    pub kind: MessageKind,
    pub cities: Vec<usize>,
    pub values: Vec<f64>,
    /// Virtual clock reading when the message was sent.
    pub time: u64,
}

/// `proposer` offered `city` to `counterpart`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Offer {
    pub proposer: usize,
    pub counterpart: usize,
    pub city: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub city: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Host of the round; `None` when the CA leads it.
    pub host: Option<usize>,
    pub participants: Vec<usize>,
    pub offers: Vec<Offer>,
    /// Objective of the chosen exchange, if one was solved.
    pub objective: Option<f64>,
    /// Objective of every proposer keeping its own city.
    pub status_quo_objective: Option<f64>,
    pub transfers: Vec<Transfer>,
    /// Every solve in the round was proven optimal and no padded cost was used.
    pub exact: bool,
    /// The budget ran out mid-round and the pre-round state was restored.
    pub abandoned: bool,
    /// Total before the round; `None` for single-round mechanisms.
    pub total_before: Option<f64>,
    pub total_after: f64,
    pub elapsed_after: u64,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line<'a> {
    Round {
        mechanism: &'a str,
        instance: &'a str,
        #[serde(flatten)]
        round: &'a RoundRecord,
    },
    Message {
        mechanism: &'a str,
        instance: &'a str,
        #[serde(flatten)]
        message: &'a Message,
    },
}

/// Writes rounds and messages as JSON lines, each round followed by its messages.
pub fn write_trace<W: Write>(
    out: &mut W,
    mechanism: &str,
    instance: &str,
    rounds: &[RoundRecord],
    messages: &[Message],
) -> io::Result<()> {
    let mut msgs = messages.iter().peekable();
    for round in rounds {
        while let Some(m) = msgs.next_if(|m| m.round < round.round) {
            write_line(out, &Line::Message { mechanism, instance, message: m })?;
        }
        write_line(out, &Line::Round { mechanism, instance, round })?;
        while let Some(m) = msgs.next_if(|m| m.round == round.round) {
            write_line(out, &Line::Message { mechanism, instance, message: m })?;
        }
    }
    for m in msgs {
        write_line(out, &Line::Message { mechanism, instance, message: m })?;
    }
    Ok(())
}

fn write_line<W: Write>(out: &mut W, line: &Line<'_>) -> io::Result<()> {
    serde_json::to_writer(&mut *out, line)?;
    out.write_all(b"\n")
}
