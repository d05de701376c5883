"""Text input shared by every reader."""
from pathlib import Path
from typing import Union

from spbtrack.exceptions import ParseError

PathLike = Union[str, Path]


def read_text(path: PathLike) -> str:
    """UTF-8 contents of ``path``.

    Unreadable files and undecodable bytes raise :class:`ParseError`; the
    latter names the line holding the first bad byte.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", path)
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        raise ParseError(
            f"not valid UTF-8 (byte 0x{data[exc.start]:02x})", path, line
        )
