"""Session lifecycle built on the engine, orchestrator, and store.

All mutating paths run under a per-session lock (one logical owner per
session at a time); cross-session work proceeds concurrently. Every event
is appended durably before it is returned for acknowledgement.
"""

from __future__ import annotations

import random
import threading
import uuid
from collections import defaultdict
from collections.abc import Callable
from datetime import datetime, timezone

from .. import content, engine
from ..engine import (
    EngineError,
    PhaseName,
    ScheduleConfig,
    SessionState,
    UserProfile,
)
from ..orchestrator import GenerationFailed, Orchestrator, ValidationFailed
from . import codec, transcript
from .store import SessionStore, UnknownSession


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class SessionService:
    def __init__(
        self,
        store: SessionStore,
        orchestrator: Orchestrator,
        schedule_config: ScheduleConfig | None = None,
        seed_override: int | None = None,
        model_ids: dict[str, str] | None = None,
        clock: Callable[[], str] = utc_now_iso,
        id_factory: Callable[[], str] = lambda: uuid.uuid4().hex,
    ):
        self.store = store
        self.orchestrator = orchestrator
        self.schedule_config = schedule_config or ScheduleConfig()
        self.seed_override = seed_override
        self.model_ids = model_ids or {}
        self.clock = clock
        self.id_factory = id_factory
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)

    def lock(self, session_id: str) -> threading.Lock:
        return self._locks[session_id]

    # --- lifecycle -------------------------------------------------------------

    def create_session(
        self, first_name: str, pronouns: str, topic: str, seed: int | None = None
    ) -> dict:
        profile = UserProfile(first_name=first_name, pronouns=pronouns, topic=topic)
        engine.validate_profile(profile)
        if seed is None:
            seed = self.seed_override if self.seed_override is not None else random.randrange(2**31)
        character_name = content.character_name_for_seed(seed)
        brief = self.orchestrator.generate_scenario(profile, character_name)
        session_id = self.id_factory()
        state = engine.new_session(
            profile,
            brief,
            character_name,
            seed,
            config=self.schedule_config,
            session_id=session_id,
        )
        meta = {
            "session_id": session_id,
            "created_at": self.clock(),
            "profile": {
                "first_name": profile.first_name,
                "pronouns": profile.pronouns,
                "topic": profile.topic,
            },
            "brief": {"background": brief.background, "instruction": brief.instruction},
            "character_name": character_name,
            "order_seed": seed,
            "schedule_config": {
                "free_turns": self.schedule_config.free_turns,
                "rounds_per_kind": self.schedule_config.rounds_per_kind,
                "kinds": [kind.value for kind in self.schedule_config.kinds],
            },
            "fingerprint": {
                "model_ids": self.model_ids,
                "seed": seed,
                "content_version": content.content_version(),
            },
        }
        self.store.create(session_id, meta)
        self.store.write_snapshot(session_id, codec.state_to_dict(state))
        return {
            "session_id": session_id,
            "character_name": character_name,
            "brief": {"background": brief.background, "instruction": brief.instruction},
        }

    def load_state(self, session_id: str) -> SessionState:
        snapshot = self.store.read_snapshot(session_id)
        if snapshot is not None:
            return codec.state_from_dict(snapshot)
        # No snapshot (crash before first write): rebuild from the log.
        return self.rebuild_state(session_id)

    def rebuild_state(self, session_id: str) -> SessionState:
        meta = self.store.read_meta(session_id)
        return codec.fold_events(
            session_id,
            UserProfile(**meta["profile"]),
            content.ScenarioBrief(**meta["brief"]),
            meta["character_name"],
            meta["order_seed"],
            self.store.read_events(session_id),
            config=transcript._schedule_config(meta),
        )

    def verify(self, session_id: str) -> bool:
        """Event-sourcing soundness: fold(log) must equal the snapshot."""
        snapshot = self.store.read_snapshot(session_id)
        if snapshot is None:
            return True
        folded = codec.state_to_dict(self.rebuild_state(session_id))
        return codec.canonical_bytes(folded) == codec.canonical_bytes(snapshot)

    # --- event handling ----------------------------------------------------------

    def _append(self, session_id: str, payload: dict) -> dict:
        event = codec.chat_event(
            event_id=self.store.last_event_id(session_id) + 1,
            session_id=session_id,
            timestamp=self.clock(),
            payload=payload,
        )
        self.store.append_event(session_id, event)
        return event

    def _error_notice(self, session_id: str, code: str, message: str, retryable: bool = False) -> dict:
        return self._append(
            session_id,
            {"type": "error_notice", "code": code, "message": message, "retryable": retryable},
        )

    def _run_directives(
        self, session_id: str, state: SessionState, directives: list[engine.Directive]
    ) -> tuple[SessionState, list[dict]]:
        """Fulfill directives, applying and persisting each produced event."""
        out: list[dict] = []
        queue = list(directives)
        while queue:
            directive = queue.pop(0)
            try:
                events = self.orchestrator.fulfill(state, directive)
            except (GenerationFailed, ValidationFailed) as exc:
                out.append(
                    self._error_notice(session_id, type(exc).__name__, str(exc), retryable=True)
                )
                return state, out
            for engine_event in events:
                state, more = engine.apply_event(state, engine_event)
                role = None
                if isinstance(engine_event, engine.CharacterReplied):
                    role = state.turns[directive.turn_index].character_messages[-1].role
                out.append(
                    self._append(session_id, codec.engine_event_to_payload(engine_event, role))
                )
                if (
                    isinstance(engine_event, engine.FeedbackIssued)
                    and engine_event.feedback.is_constructive()
                ):
                    out.append(
                        self._append(
                            session_id,
                            {
                                "type": "continue_prompt",
                                "prefilled_text": engine_event.feedback.continue_message,
                            },
                        )
                    )
                queue.extend(more)
        if state.phase.name is PhaseName.COMPLETED:
            out.append(self._append(session_id, {"type": "session_completed"}))
        return state, out

    def ensure_chat_started(self, session_id: str) -> list[dict]:
        """Open turn 0 on first connect; no-op afterwards. Caller holds the lock."""
        state = self.load_state(session_id)
        if state.phase.name is not PhaseName.BRIEFED:
            return []
        state, directives = engine.begin_chat(state)
        out = [self._append(session_id, {"type": "chat_started"})]
        state, more = self._run_directives(session_id, state, directives)
        out.extend(more)
        self.store.write_snapshot(session_id, codec.state_to_dict(state))
        return out

    def resume_pending(self, session_id: str) -> list[dict]:
        """Re-run side effects still owed (crash or generation-failure recovery)."""
        state = self.load_state(session_id)
        directives = engine.pending_directives(state)
        if not directives:
            return []
        state, out = self._run_directives(session_id, state, directives)
        self.store.write_snapshot(session_id, codec.state_to_dict(state))
        return out

    def handle_client_payload(self, session_id: str, payload: dict) -> list[dict]:
        """Apply one client event; returns every newly persisted event.

        Rejections surface as a persisted error notice; the session state is
        untouched in that case. Caller holds the per-session lock.
        """
        if not self.store.exists(session_id):
            raise UnknownSession(session_id)
        tag = payload.get("type")
        if tag not in codec.CLIENT_PAYLOADS:
            return [self._error_notice(session_id, "UnknownPayload", f"clients cannot send {tag!r}")]
        state = self.load_state(session_id)
        try:
            engine_event = codec.payload_to_engine_event(payload)
            assert engine_event is not None
            next_state, directives = engine.apply_event(state, engine_event)
        except engine.UnknownOptionIndex as exc:
            return [self._error_notice(session_id, "UnknownOptionIndex", str(exc))]
        except (EngineError, codec.CodecError, KeyError, TypeError) as exc:
            return [self._error_notice(session_id, "IllegalEvent", str(exc))]
        out = [self._append(session_id, payload)]
        next_state, more = self._run_directives(session_id, next_state, directives)
        out.extend(more)
        self.store.write_snapshot(session_id, codec.state_to_dict(next_state))
        return out

    # --- queries -------------------------------------------------------------------

    def summary(self, session_id: str) -> dict:
        meta = self.store.read_meta(session_id)
        state = self.load_state(session_id)
        return {
            "session_id": session_id,
            "character_name": state.character_name,
            "phase": state.phase.name.value,
            "turns": len(state.turns),
            "completed": engine.is_complete(state),
            "created_at": meta["created_at"],
        }

    def get_transcript(self, session_id: str, redact_name: bool = False) -> dict:
        meta = self.store.read_meta(session_id)
        state = self.load_state(session_id)
        events = self.store.read_events(session_id)
        return transcript.build_transcript(state, meta, events, redact_name=redact_name)

    def replay_events(self, session_id: str) -> list[dict]:
        if not self.store.exists(session_id):
            raise UnknownSession(session_id)
        return self.store.read_events(session_id)
