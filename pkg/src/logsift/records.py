"""Log record type shared by the embedding, ingestion and training modules."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class LogRecord:
    """One raw log message plus its whitespace token count."""

    source_id: str
    content: str
    word_count: int = field(init=False)

    def __post_init__(self):
        if not self.content.strip():
            raise ValueError("log content is empty after trimming")
        object.__setattr__(self, "word_count", len(self.content.split()))
