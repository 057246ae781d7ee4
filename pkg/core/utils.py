# core/utils.py manages logging for every command
# all progress goes to stderr so stdout stays reserved for results
import logging
import sys
from typing import Any, Dict, Iterable, Optional

import colorama
from colorama import Fore, Style

from core.config import settings

logger = logging.getLogger(__name__)

_configured = False


def setup_logging(level: Optional[str] = None) -> None:
    """Initialise colorama and the root logger once per process."""
    global _configured
    if _configured:
        return
    colorama.init(autoreset=True, strip=settings.NO_COLOR or None)
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%H:%M:%S',
        stream=sys.stderr,
    )
    _configured = True


def _colour(text: str, colour: str) -> str:
    if settings.NO_COLOR:
        return text
    return f"{colour}{text}{Style.RESET_ALL}"


def log_run_start(command: str, details: Dict[str, Any]):
    """Log the start of a command run"""
    logger.info(_colour(f"🚀 {'=' * 60}", Fore.BLUE))
    logger.info(_colour(f"🚀 {command.upper()} STARTED", Fore.BLUE))
    for key, value in details.items():
        logger.info(_colour(f"   {key}: ", Fore.CYAN) + f"{value}")


def log_epoch(record: Dict[str, Any]):
    """One coloured line per finished epoch"""
    parts = [f"{key}={value:.4f}" if isinstance(value, float) else f"{key}={value}"
             for key, value in record.items() if value is not None]
    colour = Fore.GREEN if record.get("improved") else Fore.YELLOW
    logger.info(_colour("📊 EPOCH ", colour) + " | ".join(parts))


def log_run_end(command: str, summary: Dict[str, Any]):
    """Log the end of a command run"""
    logger.info(_colour(f"✅ {command.upper()} COMPLETED", Fore.GREEN))
    for key, value in summary.items():
        logger.info(_colour(f"   {key}: ", Fore.GREEN) + f"{value}")
    logger.info(_colour(f"✅ {'=' * 60}", Fore.GREEN))


def format_table(rows: Iterable[Dict[str, Any]], columns: Iterable[str]) -> str:
    """Plain fixed-width table for stdout."""
    columns = list(columns)
    rendered = [[_cell(row.get(col)) for col in columns] for row in rows]
    widths = [max([len(col)] + [len(r[i]) for r in rendered]) for i, col in enumerate(columns)]
    lines = ["  ".join(col.rjust(w) for col, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rendered)
    return "\n".join(lines)


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)
