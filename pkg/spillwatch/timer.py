import time


def get_time() -> float:
    return time.perf_counter()


class Stopwatch:
    def __init__(self):
        self.start_time = get_time()
        self.end_time: float | None = None

    def stop(self) -> float | None:
        if self.end_time is not None:
            return None  # Already stopped

        self.end_time = get_time()
        return self.end_time - self.start_time

    def time(self) -> float:
        return get_time() - self.start_time


class PhasesStopwatch:
    """Record the start time of consecutive phases, e.g. the stages of a pipeline."""

    def __init__(self, phases: list[str]):
        self.phases = phases
        self.times: list[float | None] = [None for _ in phases]
        self.end_time: float | None = None

    def _check_previous_phases_done(self, to: int):
        for i in range(to):
            if self.times[i] is None:
                raise RuntimeError(
                    f"Wanted to start phase {self.phases[to]} "
                    f"but earlier phase {self.phases[i]} hasn't started"
                )

    def time_phase_if_not_started(self, phase: str):
        i = self.get_phase_index(phase)
        self._check_previous_phases_done(i)

        if self.times[i] is None:
            self.times[i] = get_time()

    def stop(self):
        self.end_time = get_time()

    def get_phase_index(self, phase: str) -> int:
        try:
            i = self.phases.index(phase)
        except ValueError as e:
            raise ValueError(
                f"Phase {phase} not in phases. Valid phases: {self.phases}"
            ) from e

        return i

    def durations(self) -> dict[str, float]:
        """Duration of every started phase, in seconds.

        A phase lasts until the next phase starts, the last one until `stop()`.
        """
        result: dict[str, float] = {}
        for i, phase in enumerate(self.phases):
            start = self.times[i]
            if start is None:
                break
            if i + 1 < len(self.phases) and self.times[i + 1] is not None:
                end = self.times[i + 1]
            else:
                end = self.end_time
            if end is None:
                break
            result[phase] = end - start
        return result
