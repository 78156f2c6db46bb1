def main():
    from . import cli

    raise SystemExit(cli.main())


__all__ = ["main"]
