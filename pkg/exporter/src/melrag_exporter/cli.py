"""Command-line front end for the embedding export."""

from __future__ import annotations

import sys

import click

from melrag import SerializationMode

from .encoders import BACKBONES, WEIGHTS_MODES
from .export import export_embeddings


@click.command("melrag-export")
@click.option("--cases", "cases_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--images-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--backbone", default="resnext50", show_default=True,
              type=click.Choice(list(BACKBONES)))
@click.option("--mode", default=SerializationMode.ATTRIBUTE_VALUE.value, show_default=True,
              type=click.Choice([m.value for m in SerializationMode]))
@click.option("--out", "out_bundle", required=True, type=click.Path(dir_okay=False))
@click.option("--weights", default="random", show_default=True,
              type=click.Choice(list(WEIGHTS_MODES)),
              help="'random' is seeded and fully offline; 'pretrained' needs checkpoints.")
@click.option("--batch-size", default=8, show_default=True, type=int)
def export_cmd(cases_file, images_dir, backbone, mode, out_bundle, weights, batch_size) -> None:
    """Encode cases into an embedding bundle plus a JSON manifest."""
    if batch_size < 1:
        raise click.UsageError("batch-size must be >= 1")
    manifest = export_embeddings(
        cases_file, images_dir, backbone, mode, out_bundle,
        weights=weights, batch_size=batch_size,
    )
    click.echo(
        f"exported {manifest.count} cases ({manifest.skipped_count} skipped) "
        f"dims ({manifest.image_dim}, {manifest.text_dim}) -> {out_bundle}"
    )


def main(argv: list[str] | None = None) -> int:
    try:
        export_cmd.main(args=argv, standalone_mode=False)
    except SystemExit as e:
        return int(e.code or 0)
    except click.exceptions.Exit as e:
        return int(e.exit_code)
    except click.UsageError as e:
        click.echo(f"error: {e.format_message()}", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
