"""Session lifecycle over REST plus a per-session WebSocket event stream,
backed by append-only event-sourced persistence."""
