from diffuma.cli.main import ExitCode, build_parser, main


__all__ = ["ExitCode", "build_parser", "main"]
