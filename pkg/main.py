"""
Entrypoint principal del proyecto
- CLI: ejecuta un subcomando sobre una configuración JSON y registra la corrida
"""

import argparse
import logging
import sys
import traceback

from sqlalchemy.orm import Session

import models
from experiments import EXPERIMENTS
from fbsfilter.config import load_config, runtime_settings, with_seed
from fbsfilter.errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# =========================================================
# ARGUMENTOS
# =========================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbsfilter",
        description="Filtrado no lineal en ruido de lámina browniana fraccionaria",
    )
    parser.add_argument("subcommand", choices=sorted(EXPERIMENTS))
    parser.add_argument("--config", required=True, help="Archivo JSON de configuración")
    parser.add_argument("--seed", type=int, default=None, help="Semilla maestra (u64), reemplaza la del config")
    parser.add_argument("--out", default=None, help="Directorio de salida")
    parser.add_argument("--jobs", type=int, default=None, help="Lotes de partículas en paralelo")
    parser.add_argument("--check-level", choices=("fast", "full"), default=None)
    return parser


def configure_logging(level: int = logging.INFO):
    logging.basicConfig(
        level=level,
        format="[%(asctime)s] %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
        stream=sys.stderr,
    )

# =========================================================
# EJECUCIÓN
# =========================================================


def run_experiment(experiment_class, config, settings) -> dict:
    """Ejecuta un subcomando y registra el resultado en el ledger"""
    experiment = experiment_class(config, settings)
    db: Session = models.SessionLocal()

    run = models.start_run(
        db,
        run_id=experiment.run_id,
        subcommand=experiment.name,
        config_digest=experiment.digest,
        seed=config.seeds.master,
        check_level=settings.check_level,
        out_dir=str(experiment.run_dir),
    )

    stats = {
        "subcommand": experiment.name,
        "checks_total": 0,
        "checks_passed": 0,
        "run_dir": str(experiment.run_dir),
        "status": "pending",
        "exit_code": EXIT_OK,
    }

    try:
        print("\n" + "=" * 70)
        print(f"🚀 EJECUTANDO {experiment.name}")
        print("=" * 70)

        with experiment:
            checks = experiment.run_checks()
            experiment.finish(checks)

        print(f"💾 Guardando {len(checks)} veredictos en el ledger...")
        for check in checks:
            models.save_check(db, run, experiment.to_db_check(check))

        stats["checks_total"] = len(checks)
        stats["checks_passed"] = sum(c.passed for c in checks)
        failed = stats["checks_passed"] < stats["checks_total"]
        stats["status"] = "failed" if failed else "success"
        stats["exit_code"] = EXIT_CHECK_FAILED if failed else EXIT_OK

        for check in checks:
            if not check.passed:
                print(f"❌ {check.name}: {check.statistic:.4g} > {check.threshold:.4g}")
        print(f"✅ {experiment.name} completado")
        print(f"   Chequeos: {stats['checks_passed']}/{stats['checks_total']}")
        print(f"   Artefactos: {experiment.run_dir}")

    except (NumericalError, ConfigError) as e:
        kind = "numérica" if isinstance(e, NumericalError) else "de configuración"
        print(f"❌ Falla {kind} en {experiment.name}: {e}")
        traceback.print_exc()
        stats["status"] = "error"
        stats["exit_code"] = EXIT_NUMERICAL if isinstance(e, NumericalError) else EXIT_CONFIG
        stats["error"] = str(e)

    except Exception as e:
        # cualquier otra falla es un bug: queda en el ledger y se propaga
        print(f"❌ Error inesperado en {experiment.name}: {type(e).__name__}: {e}")
        stats["status"] = "error"
        stats["exit_code"] = None
        stats["error"] = f"{type(e).__name__}: {e}"
        raise

    finally:
        db.rollback()
        models.finish_run(
            db,
            run,
            status=stats["status"],
            checks_total=stats["checks_total"],
            checks_passed=stats["checks_passed"],
            exit_code=stats["exit_code"],
            error_message=stats.get("error"),
        )
        db.close()

    return stats


def print_summary(stats: dict):
    print("\n" + "=" * 70)
    print("📊 RESUMEN FINAL")
    print("=" * 70)
    icon = "✅" if stats["status"] == "success" else "❌"
    print(
        f"{icon} {stats['subcommand']:14} | "
        f"Chequeos: {stats['checks_passed']:3d}/{stats['checks_total']:3d} | "
        f"Estado: {stats['status']:8} | "
        f"Exit: {stats['exit_code']}"
    )
    print("=" * 70 + "\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()

    try:
        config = with_seed(load_config(args.config), args.seed)
        settings = runtime_settings(config, out=args.out, jobs=args.jobs, check_level=args.check_level)
    except ConfigError as e:
        print(f"❌ {e}", file=sys.stderr)
        for message in e.errors:
            print(f"   - {message}", file=sys.stderr)
        return EXIT_CONFIG

    print("\n" + "=" * 70)
    print("🧮 FBSFILTER - FILTRADO EN RUIDO FRACCIONARIO")
    print(f"Subcomando: {args.subcommand} | Semilla: {config.seeds.master} | Nivel: {settings.check_level}")
    print("=" * 70)

    print("🔧 Inicializando ledger de corridas...")
    if settings.database_url != models.DATABASE_URL:
        models.configure_database(settings.database_url)
    models.init_db()
    print("✅ Ledger listo\n")

    stats = run_experiment(EXPERIMENTS[args.subcommand], config, settings)
    print_summary(stats)
    return stats["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
