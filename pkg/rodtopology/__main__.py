#!/usr/bin/env python3

from . import cli
import sys
import inspect


def list_commands(module):
    # only the public functions defined in the 'cli' module
    return [
        name.replace("_", "-")
        for name, obj in inspect.getmembers(module, inspect.isfunction)
        if obj.__module__ == module.__name__ and not name.startswith("_")
    ]


def main():
    available_commands = list_commands(cli)

    if len(sys.argv) < 2:
        print("usage: rodtopology [COMMAND] <ARGUMENTS>")
        print("Available commands:", ", ".join(available_commands))
        print("       For example, try 'rodtopology analyze diagram.json'")
        sys.exit(2)

    if sys.argv[1] not in available_commands:
        print(f"ERROR: Unknown command '{sys.argv[1]}'")
        print("Available commands: ", ", ".join(available_commands))
        sys.exit(2)

    fn = getattr(cli, sys.argv[1].replace("-", "_"))
    sys.argv = sys.argv[1:]
    fn()


if __name__ == "__main__":
    main()
