//! Ground truth by replaying annotated calls.

use super::session::{SessionError, SessionRecord};
use crate::doc::{Document, DocumentState};
use crate::registry::Registry;

/// Cumulative expected state after each turn.
pub fn replay_annotated(session: &SessionRecord) -> Result<Vec<DocumentState>, SessionError> {
    session.validate()?;
    let reg = Registry::shared();
    let mut doc = Document::from_state(&session.initial_state)
        .map_err(|e| SessionError::State(session.session_id.clone(), e))?;
    let mut states = Vec::with_capacity(session.turns.len());
    for turn in &session.turns {
        for call in &turn.annotated_apis {
            reg.execute(call, &mut doc)
                .map_err(|error| SessionError::Replay {
                    session: session.session_id.clone(),
                    turn_id: turn.turn_id,
                    call: call.to_string(),
                    error,
                })?;
        }
        let state = doc
            .extract_state()
            .map_err(|e| SessionError::State(session.session_id.clone(), e))?;
        states.push(state);
    }
    Ok(states)
}

/// Replay and store every turn's expected state in place.
pub fn fill_expected(session: &mut SessionRecord) -> Result<(), SessionError> {
    let states = replay_annotated(session)?;
    for (turn, state) in session.turns.iter_mut().zip(states) {
        turn.expected_state = Some(state);
    }
    Ok(())
}

/// State each turn starts from: the initial state, then every earlier expected state.
pub fn pre_states(session: &SessionRecord) -> Result<Vec<DocumentState>, SessionError> {
    let expected = match session.turns.iter().all(|t| t.expected_state.is_some()) {
        true => session
            .turns
            .iter()
            .map(|t| t.expected_state.clone().expect("checked"))
            .collect(),
        false => replay_annotated(session)?,
    };
    let mut pre = vec![session.initial_state.clone()];
    pre.extend(expected.into_iter().take(session.turns.len() - 1));
    Ok(pre)
}
