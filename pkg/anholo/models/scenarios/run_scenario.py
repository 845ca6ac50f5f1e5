from typing import Optional

from anholo.schemas.conf.run import RunConfig
from anholo.schemas.output import Report, TaskResult
from anholo.models.scenarios.tasks import TASKS, TaskContext
from anholo.utils.errors import ConfigurationError
from anholo.utils.globals import VERSION
from anholo.utils.logging import LOGGER
from anholo.utils.progress_bar import progress_bar as pb


class RunScenario:
    """
    Runs the task list of a configuration in order. A failing task is recorded
    with its error and the remaining tasks still run.
    """

    def __init__(
        self, config: RunConfig, tol_scale: float = 1.0, seed: Optional[int] = None
    ):
        self.config = config
        self.tol_scale = tol_scale
        self.seed = config.seed if seed is None else seed

    def _prep(self) -> TaskContext:
        if self.tol_scale <= 0:
            raise ConfigurationError("Tolerance scale must be positive")
        tolerances = self.config.tolerances.scaled(self.tol_scale)
        context = TaskContext(self.config, tolerances, self.seed)
        # expressions are parsed up front so a malformed source fails the run
        if self.config.source.kind in ("lagrangian", "metric"):
            context.metric()
        return context

    def run(self, progress_bar: bool = False) -> Report:
        """
        :param progress_bar: whether or not to show the progress bar over tasks
        :return: report with the config echo, ordered task results and invariants
        """
        LOGGER.info(f"Starting Run Scenario with {len(self.config.tasks)} tasks")
        context = self._prep()
        report = Report(
            meta={"version": VERSION, "seed": self.seed, "tol_scale": self.tol_scale},
            config=self.config.dict(),
        )
        tasks = pb(self.config.tasks, "tasks") if progress_bar else self.config.tasks
        for tag in tasks:
            LOGGER.info(f"Running task {tag}")
            try:
                result, checks = TASKS[tag](tag, context)
            except (ValueError, ArithmeticError) as e:
                error = f"{type(e).__name__}: {e}"
                LOGGER.warning(f"Task {tag} failed: {error}")
                failed = TaskResult(task=tag, status="failed", error=error)
                report.results.append(failed)
                continue
            report.results.append(TaskResult(task=tag, status="ok", result=result))
            report.invariants.extend(checks)
        return report
