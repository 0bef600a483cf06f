"""
Modelos de base de datos para el registro de corridas de fbsfilter
"""

import logging
import os
from datetime import datetime, timezone

from dotenv import load_dotenv
from sqlalchemy import (
    Boolean, DateTime, Float, ForeignKey, Integer, String, Text, create_engine,
)
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship, sessionmaker

load_dotenv()

logger = logging.getLogger(__name__)

# =========================================================
# CONFIGURACIÓN BD
# =========================================================

DATABASE_URL = os.getenv("FBS_DATABASE_URL", "sqlite:///fbsfilter_runs.db")

engine = create_engine(DATABASE_URL, pool_pre_ping=True)
SessionLocal = sessionmaker(bind=engine)


class Base(DeclarativeBase):
    pass


def configure_database(url: str):
    """Apunta engine y SessionLocal a otra URL (tests, --out con ledger propio)"""
    global engine, DATABASE_URL
    DATABASE_URL = url
    engine = create_engine(url, pool_pre_ping=True)
    SessionLocal.configure(bind=engine)
    logger.info(f"Ledger de corridas en {url}")
    return engine


def _now() -> datetime:
    return datetime.now(timezone.utc)

# =========================================================
# MODELOS
# =========================================================

class ExperimentRun(Base):
    __tablename__ = "experiment_runs"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    run_id: Mapped[str] = mapped_column(String(32), nullable=False, index=True)
    subcommand: Mapped[str] = mapped_column(String(32), nullable=False)
    config_digest: Mapped[str] = mapped_column(String(64), nullable=False)
    seed: Mapped[str] = mapped_column(String(32), nullable=False)
    check_level: Mapped[str] = mapped_column(String(8), default="full")
    out_dir: Mapped[str | None] = mapped_column(Text)
    status: Mapped[str] = mapped_column(String(16), default="pending")
    checks_total: Mapped[int] = mapped_column(Integer, default=0)
    checks_passed: Mapped[int] = mapped_column(Integer, default=0)
    exit_code: Mapped[int | None] = mapped_column(Integer)
    error_message: Mapped[str | None] = mapped_column(Text)
    started_at: Mapped[datetime] = mapped_column(DateTime, default=_now)
    finished_at: Mapped[datetime | None] = mapped_column(DateTime)

    checks: Mapped[list["CheckRecord"]] = relationship(back_populates="run", cascade="all, delete-orphan")


class CheckRecord(Base):
    __tablename__ = "check_records"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    run_pk: Mapped[int] = mapped_column(ForeignKey("experiment_runs.id"), nullable=False)
    name: Mapped[str] = mapped_column(String(128), nullable=False)
    passed: Mapped[bool] = mapped_column(Boolean, nullable=False)
    statistic: Mapped[float] = mapped_column(Float)
    threshold: Mapped[float] = mapped_column(Float)
    details: Mapped[str | None] = mapped_column(Text)

    run: Mapped[ExperimentRun] = relationship(back_populates="checks")

# =========================================================
# FUNCIONES BD
# =========================================================

def init_db():
    """Crea las tablas del ledger de corridas si no existen"""
    Base.metadata.create_all(bind=engine)


def start_run(db, run_id: str, subcommand: str, config_digest: str, seed: int, check_level: str, out_dir: str | None = None):
    """Abre la fila de una corrida en estado running con su digest y semilla"""
    run = ExperimentRun(
        run_id=run_id,
        subcommand=subcommand,
        config_digest=config_digest,
        seed=str(seed),
        check_level=check_level,
        out_dir=out_dir,
        status="running",
    )
    db.add(run)
    db.commit()
    db.refresh(run)
    return run


def save_check(db, run: ExperimentRun, check_data: dict):
    record = CheckRecord(run_pk=run.id, **check_data)
    db.add(record)
    db.commit()
    return record


def finish_run(
        db,
        run: ExperimentRun,
        status: str,
        checks_total: int = 0,
        checks_passed: int = 0,
        exit_code: int | None = None,
        error_message: str | None = None,
):
    """Cierra la corrida con su estado, conteo de chequeos y exit code (None si se propagó un bug)"""
    run.status = status
    run.checks_total = checks_total
    run.checks_passed = checks_passed
    run.exit_code = exit_code
    run.error_message = error_message
    run.finished_at = _now()
    db.commit()
