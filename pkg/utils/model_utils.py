from pydantic import BaseModel


class CachedArraysModel(BaseModel):
    """Frozen model that keeps numpy caches in private attributes. Equality and hashing
    go through the declared fields only, the caches being derived from them."""

    def __eq__(self, other):
        return type(other) is type(self) and self.model_dump() == other.model_dump()

    def __hash__(self):
        return hash((type(self).__name__, self.model_dump_json()))
