import time
from typing import Optional

from .errors import EnumerationTimeout


class Deadline:
    def __init__(self, seconds: Optional[float]):
        self.seconds = seconds
        self.__expires = None if seconds is None else time.monotonic() + seconds

    @property
    def remaining(self) -> Optional[float]:
        if self.__expires is None:
            return None
        return max(0.0, self.__expires - time.monotonic())

    def expired(self) -> bool:
        return self.__expires is not None and time.monotonic() >= self.__expires

    def check(self):
        if self.expired():
            raise EnumerationTimeout(f"time limit of {self.seconds:g}s exceeded")


NEVER = Deadline(None)


def of(seconds: Optional[float]) -> Deadline:
    if seconds is None or seconds <= 0:
        return NEVER
    return Deadline(seconds)
