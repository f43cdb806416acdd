from datetime import datetime
from typing import Optional

from sqlalchemy import DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase):
    pass


class BenchRun(Base):
    __tablename__ = "bench_runs"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    started: Mapped[datetime] = mapped_column(DateTime)
    corpus: Mapped[str] = mapped_column(String(1024))
    timeout_secs: Mapped[float] = mapped_column(Float)
    jobs: Mapped[int] = mapped_column(Integer)

    results: Mapped[list["BenchResult"]] = relationship(
        back_populates="run",
        cascade="all, delete",
    )

    def __repr__(self):
        return f"BenchRun(id={self.id!r}, corpus={self.corpus!r})"


class BenchResult(Base):
    __tablename__ = "bench_results"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(ForeignKey("bench_runs.id", ondelete="CASCADE"))
    input_name: Mapped[str] = mapped_column(String(1024))
    n: Mapped[int] = mapped_column(Integer)
    quad_size: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)
    std_size: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)
    direct_secs: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    quad_secs: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    conversion_secs: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    pipeline_secs: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    speedup: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    direct_ratio: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    quad_ratio: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    conversion_ratio: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    status: Mapped[str] = mapped_column(String(16))
    error: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    run: Mapped["BenchRun"] = relationship(back_populates="results")

    def __repr__(self):
        return f"BenchResult(input_name={self.input_name!r}, status={self.status!r})"
