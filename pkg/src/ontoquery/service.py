"""HTTP API: chat sessions, knowledge-graph inspection, fact extraction.

Every message response carries the generated SPARQL, the proof triples and
the DOT rendering of the document graph, so a client can show not just the
answer but the relation chain that produced it.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .compiler import Answer, ProofEntry
from .dialogue import BotReply, DialogueSession
from .engine import Engine, PipelineError


class MessageRequest(BaseModel):
    text: str


class ExtractRequest(BaseModel):
    text: str
    commit: bool = True


def _render_proof(kg, proof: list[list[ProofEntry]]) -> list[list[dict]]:
    out = []
    for row in proof:
        entries = []
        for entry in row:
            entries.append({
                "pattern": _pattern_str(kg, entry.pattern),
                "triple": [
                    kg.shrink(entry.triple.subject),
                    kg.shrink(entry.triple.predicate),
                    _term_str(kg, entry.triple.object),
                ],
            })
        out.append(entries)
    return out


def _pattern_str(kg, pattern) -> str:
    return " ".join(_term_str(kg, t) for t in (pattern.subject, pattern.predicate, pattern.object))


def _term_str(kg, term) -> str:
    from .rdf import Iri, Literal, Var

    if isinstance(term, Var):
        return f"?{term.name}"
    if isinstance(term, Iri):
        return kg.shrink(term)
    if isinstance(term, Literal):
        return f'"{term.lexical}"'
    return str(term)


def _reply_payload(engine: Engine, reply: BotReply) -> dict:
    answer: Answer | None = reply.answer
    return {
        "kind": reply.kind.value,
        "text": reply.text,
        "state": reply.state,
        "condition": reply.condition.value,
        "cards": [{"lines": c.lines, "text": c.text} for c in (answer.rows if answer else [])],
        "sparql": answer.sparql if answer else None,
        "proof": _render_proof(engine.kg, answer.proof) if answer else [],
        "dot": reply.dot,
    }


def create_app(engine: Engine | None = None) -> FastAPI:
    engine = engine or Engine()
    app = FastAPI(title="ontoquery", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, DialogueSession] = {}
    sessions_lock = threading.Lock()
    app.state.engine = engine

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed request body"})

    @app.get("/health")
    def health():
        return {"status": "ok", "triples": len(engine.kg)}

    @app.post("/sessions", status_code=201)
    def create_session():
        session = DialogueSession(engine)
        with sessions_lock:
            sessions[session.id] = session
        return {"session": session.id, "state": session.state}

    def _get_session(session_id: str) -> DialogueSession:
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, message: MessageRequest):
        session = _get_session(session_id)
        if not message.text.strip():
            raise HTTPException(status_code=422, detail="utterance must not be empty")
        reply = session.handle_turn(message.text)
        return _reply_payload(engine, reply)

    @app.get("/sessions/{session_id}/context")
    def get_context(session_id: str):
        session = _get_session(session_id)
        turns = []
        for turn in session.turns:
            turns.append({
                "utterance": turn.utterance,
                "reply": _reply_payload(engine, turn.reply),
                "condition": turn.condition.value,
                "augmented": turn.augmented,
            })
        return {"session": session.id, "state": session.state, "turns": turns}

    @app.get("/graph/stats")
    def graph_stats():
        return engine.stats()

    @app.post("/extract")
    def extract(request: ExtractRequest):
        if not request.text.strip():
            raise HTTPException(status_code=422, detail="text must not be empty")
        try:
            answer = engine.extract(request.text, commit=request.commit)
        except PipelineError as err:
            raise HTTPException(status_code=422, detail=str(err))
        return {
            "sparql": answer.sparql,
            "added": answer.inserted,
            "committed": request.commit,
            "text": answer.rows[0].text if answer.rows else "",
        }

    return app


def serve(engine: Engine | None = None, host: str = "127.0.0.1", port: int = 8000):
    import uvicorn

    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")
