"""Command line: one-shot questions, a chat REPL, extraction, viz, serving."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .engine import Engine, EngineConfig


def _engine(config_path: str | None) -> Engine:
    return Engine(EngineConfig.load(config_path))


def _print_reply(reply) -> None:
    if reply.answer is not None:
        click.echo(reply.answer.sparql)
    if reply.kind.value == "answer" and reply.answer is not None:
        for card in reply.answer.rows:
            click.echo("")
            for line in card.lines:
                click.echo(line)
    else:
        click.echo("")
        click.echo(reply.text)


@click.group()
def main():
    """Question answering over the embedded knowledge graph."""


@main.command()
@click.option("-q", "--question", required=True, help="The question to answer.")
@click.option("--config", "config_path", default=None, help="Path to the engine config file.")
def ask(question: str, config_path: str | None):
    """Answer one question and print the generated SPARQL with the cards."""
    try:
        from .dialogue import DialogueSession

        session = DialogueSession(_engine(config_path))
        reply = session.handle_turn(question)
    except Exception as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(1)
    _print_reply(reply)


@main.command()
@click.option("--config", "config_path", default=None)
def chat(config_path: str | None):
    """Interactive chat with conversation context."""
    from .dialogue import DialogueSession

    session = DialogueSession(_engine(config_path))
    click.echo("ontoquery chat; empty line quits.")
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            break
        if not line:
            break
        try:
            reply = session.handle_turn(line)
        except Exception as err:
            click.echo(f"error: {err}", err=True)
            continue
        click.echo(reply.text)


@main.command()
@click.option("-f", "--file", "path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--commit", is_flag=True, default=False, help="Apply the INSERT to the graph.")
@click.option("--config", "config_path", default=None)
def extract(path: Path, commit: bool, config_path: str | None):
    """Compile declarative text from a file into INSERT DATA."""
    try:
        answer = _engine(config_path).extract(path.read_text(), commit=commit)
    except Exception as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(1)
    click.echo(answer.sparql)
    click.echo(answer.rows[0].text if answer.rows else "")


@main.command()
@click.option("-q", "--question", required=True)
@click.option("-o", "--output", default="out.dot", type=click.Path(path_type=Path))
@click.option("--config", "config_path", default=None)
def viz(question: str, output: Path, config_path: str | None):
    """Write the document graph for an utterance as DOT."""
    try:
        dot = _engine(config_path).viz(question)
    except Exception as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(1)
    output.write_text(dot)
    click.echo(f"wrote {output}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--config", "config_path", default=None)
def serve(host: str, port: int, config_path: str | None):
    """Start the HTTP API."""
    from .service import serve as run_service

    run_service(_engine(config_path), host=host, port=port)


if __name__ == "__main__":
    main()
