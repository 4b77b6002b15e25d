"""Run the adapter server."""

from __future__ import annotations

import click
import uvicorn

from .app import AdapterConfig, create_app


@click.command()
@click.option("--model", default="stub", show_default=True,
              help="'stub' (no weights) or a diffusers model id.")
@click.option("--device", default="cpu", show_default=True)
@click.option("--prompt-convention", type=click.Choice(["concat", "split"]),
              default="concat", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8800, show_default=True)
def main(model, device, prompt_convention, host, port):
    """Serve the edit wire protocol."""
    config = AdapterConfig(model=model, device=device, prompt_convention=prompt_convention)
    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    main()
