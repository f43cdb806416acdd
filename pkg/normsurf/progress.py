from rich.console import Console
from rich.live import Live
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn,
)


class Task:
    def __init__(self, tm: "TaskManager", name: str, total: int):
        self.tm = tm
        self.name = name
        self.total = total

    def advance(self, cnt: float = 1):
        self.tm.progress.advance(self.task_id, cnt)

    def describe(self, name: str):
        self.name = name
        self.tm.progress.update(self.task_id, description=name)

    def __enter__(self):
        self.tm.__enter__()
        self.task_id = self.tm.progress.add_task(self.name, total=self.total)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.tm.__exit__(exc_type, exc_val, exc_tb)


class TaskManager(Live):
    def __init__(self, *, console: Console):
        self.progress = Progress(
            SpinnerColumn(),
            TextColumn("{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=console,
        )
        super().__init__(self.progress, console=console, transient=True)

    def __enter__(self) -> "TaskManager":
        super().__enter__()
        return self

    def create_task(self, name: str, total: int) -> Task:
        return Task(self, name, total)
