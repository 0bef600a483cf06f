import hashlib
import json


def make_config_digest(config: dict) -> str:
    """
    sha256 estable de una configuración (claves ordenadas, sin espacios)
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def make_run_id(*parts) -> str:
    """
    Identificador corto de una corrida a partir de subcomando, digest y semilla
    """
    normalized = "|".join(
        str(part).strip().lower() for part in parts if part is not None
    )

    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()[:16]
