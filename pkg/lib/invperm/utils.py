import csv
import io
import logging
import os
import sys
from typing import *

logging.getLogger("matplotlib").setLevel(logging.WARNING)

logger = logging.getLogger("invperm")


def setup_logging(level: str = "INFO"):
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def read_key_values(path: str) -> Dict[str, str]:
    """
    Flat `key = value` file. Blank lines and `#` comments are skipped,
    later keys override earlier ones.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"spec file not found: {path}")

    values: Dict[str, str] = {}
    with open(path, "r", encoding="utf8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            values[key] = value.strip()
    return values


def split_list(value: Any) -> Any:
    # "1, 2,3" -> ["1", "2", "3"]; lists and None pass through
    if isinstance(value, str):
        return [x.strip() for x in value.replace(";", ",").split(",") if x.strip()]
    if isinstance(value, (int, float)):
        return [value]
    return value


def format_decimal(value: Optional[float], digits: int = 12) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return f"{value:.{digits}g}"


def write_csv(rows: List[Dict[str, Any]], columns: List[str], out: Optional[str] = None, header: bool = True):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header:
        writer.writerow(columns)
    for row in rows:
        writer.writerow([format_decimal(row.get(c)) if not isinstance(row.get(c), str) else row.get(c) for c in columns])
    return write_text(buffer.getvalue(), out)


def write_jsonl(lines: List[str], out: Optional[str] = None):
    return write_text("".join(line + "\n" for line in lines), out)


def write_text(text: str, out: Optional[str]):
    if out is None:
        return text
    directory = os.path.dirname(os.path.abspath(out))
    os.makedirs(directory, exist_ok=True)
    with open(out, "w", encoding="utf8", newline="") as f:
        f.write(text)
    logger.info(f"wrote {out}")
    return text
