import argparse
import json

from django.core.management.base import BaseCommand, CommandError

from core.utils.errors import ArgumentError, FormatError, NumericError, RcurcError

# Códigos de salida
EXIT_NOT_CONVERGED = 1
EXIT_NUMERIC = 1
EXIT_USAGE = 2


def auto_or_float(value):
    """Tipo argparse: número real o 'auto'."""
    if value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {value!r}")


def unit_interval(value):
    value = float(value)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is not in (0, 1]")
    return value


class RcurcCommand(BaseCommand):
    """
    Base de los comandos del laboratorio: subclases implementan run(**options).

    Traduce los errores del pipeline a CommandError con returncode 2 (uso, E/S
    o formato) o 1 (fallo numérico), con la etapa en el mensaje.
    """

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except CommandError:
            raise
        except (ArgumentError, FormatError) as exc:
            raise CommandError(f"stage={exc.stage or 'config'}: {exc}", returncode=EXIT_USAGE) from exc
        except OSError as exc:
            raise CommandError(f"stage={getattr(exc, 'stage', None) or 'io'}: {exc}", returncode=EXIT_USAGE) from exc
        except NumericError as exc:
            where = f" (iteration {exc.iteration})" if exc.iteration else ""
            raise CommandError(f"stage={exc.stage or 'solve'}: {exc}{where}", returncode=EXIT_NUMERIC) from exc
        except RcurcError as exc:
            raise CommandError(f"stage={exc.stage}: {exc}", returncode=EXIT_USAGE) from exc

    def run(self, **options):
        raise NotImplementedError

    def emit(self, payload):
        """Resumen final en stdout, una línea JSON con claves ordenadas."""
        self.stdout.write(json.dumps(payload, sort_keys=True, default=str))

    def fail_if_not_converged(self, strict, converged, what):
        if strict and not converged:
            self.stderr.write(f"{what} did not converge")
            raise CommandError(f"stage=solve: {what} did not converge", returncode=EXIT_NOT_CONVERGED)
