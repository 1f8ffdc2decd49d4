from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Generic, TypeVar

Item = TypeVar("Item")


class AbstractRepository(ABC, Generic[Item]):
    """File-backed store addressed by the key its subclass derives from the stored item."""

    @abstractmethod
    def add_one(self, item: Any) -> Path:
        raise NotImplementedError

    @abstractmethod
    def find_all(self) -> list[Path]:
        raise NotImplementedError

    @abstractmethod
    def delete_one(self, *key: Any) -> None:
        raise NotImplementedError

    @abstractmethod
    def find_one(self, *key: Any) -> Item:
        raise NotImplementedError

    def find_one_or_none(self, *key: Any) -> Item | None:
        try:
            return self.find_one(*key)
        except FileNotFoundError:
            return None
