import tracemalloc
from contextlib import contextmanager, nullcontext

import numpy as np


class BufferLedger:
    """
    Contabilidad de memoria de una ejecución del solver.

    solve(..., ledger=BufferLedger()) hace dos cosas:

    - anota nombre, forma y bytes de cada panel o núcleo que reserva
      (`track`), para comprobar que nunca se forma una matriz n1×n2;
    - mide con tracemalloc el pico de memoria reservada durante toda la
      ejecución (`watch`), temporales de numpy incluidos. `peak_bytes` es
      ese pico por encima de lo que ya estaba vivo al entrar.
    """

    def __init__(self):
        self.records = []
        self.high_water = 0

    def track(self, name, arr):
        self.records.append((name, tuple(arr.shape), int(arr.nbytes)))
        return arr

    @contextmanager
    def watch(self):
        started = not tracemalloc.is_tracing()
        if started:
            tracemalloc.start()
        baseline, _ = tracemalloc.get_traced_memory()
        tracemalloc.reset_peak()
        try:
            yield self
        finally:
            _, peak = tracemalloc.get_traced_memory()
            self.high_water = max(self.high_water, peak - baseline)
            if started:
                tracemalloc.stop()

    def shapes(self):
        return {shape for _, shape, _ in self.records}

    def has_shape(self, shape):
        return tuple(shape) in self.shapes()

    def largest(self):
        """(name, shape, nbytes) del buffer anotado más grande, o None."""
        if not self.records:
            return None
        return max(self.records, key=lambda rec: rec[2])

    def peak_bytes(self):
        return self.high_water

    def __len__(self):
        return len(self.records)


class _NullLedger:

    def track(self, name, arr):
        return arr

    def watch(self):
        return nullcontext(self)


NULL_LEDGER = _NullLedger()


def dense_footprint(shape):
    """Bytes de una matriz densa float64 de esa forma."""
    return int(np.prod(shape)) * np.dtype(np.float64).itemsize


def panel_footprint(obs):
    """Bytes de los dos paneles float64 de una observación: |I|×n2 más n1×|J|."""
    n1, n2 = obs.shape
    return (len(obs.row_idx) * n2 + n1 * len(obs.col_idx)) * np.dtype(np.float64).itemsize
