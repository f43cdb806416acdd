import sqlalchemy
from sqlalchemy import orm, select

from . import config, context, model


class Database:
    def __init__(self, url: str) -> None:
        self.__engine = sqlalchemy.create_engine(url)
        model.Base.metadata.create_all(self.__engine)

    def session(self, **kwargs) -> orm.Session:
        return orm.Session(self.__engine, **kwargs)

    def store_run(self, run: model.BenchRun) -> int:
        with self.session(expire_on_commit=False) as conn:
            conn.add(run)
            conn.commit()
            return run.id

    def runs(self) -> list[model.BenchRun]:
        with self.session() as conn:
            stmt = (
                select(model.BenchRun)
                .options(orm.selectinload(model.BenchRun.results))
                .order_by(model.BenchRun.id)
            )
            return list(conn.scalars(stmt))

    def results(self, run_id: int) -> list[model.BenchResult]:
        with self.session() as conn:
            stmt = (
                select(model.BenchResult)
                .where(model.BenchResult.run_id == run_id)
                .order_by(model.BenchResult.id)
            )
            return list(conn.scalars(stmt))


def get_database() -> Database:
    def open_database() -> Database:
        cfg = config.get_instance()
        return Database(cfg.database_url)

    return context.get_value("DATABASE", factory=open_database)
