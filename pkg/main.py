# Command-line entry point: python main.py {synth,train,eval,blank,inspect} [flags]
import sys

from cli.commands import run

if __name__ == "__main__":
    sys.exit(run())
