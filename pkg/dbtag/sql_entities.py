"""
SQL parsing and database entity extraction.

Queries are parsed with sqlglot (sqlite dialect unless DBTAG_SQL_DIALECT
says otherwise). Entities are collected by a depth-first walk that visits
the clauses of every SELECT in the order select, from, where, group,
having, order, limit, recursing into joins, subqueries and set operations.
"""

import logging
from typing import Iterator, Optional, Set, Tuple

import sqlglot
from sqlglot import exp
from sqlglot.errors import ParseError, TokenError
from pydantic import BaseModel, ConfigDict

import config
from errors import SqlParseError
from models import DbEntity, EntitySet, EntityType

logger = logging.getLogger(__name__)

# Clause visiting order inside a SELECT; keys not listed are visited afterwards
# in the order sqlglot stored them.
_SELECT_CLAUSES = (
    "with", "expressions", "from", "from_", "joins", "laterals", "where",
    "group", "having", "qualify", "windows", "order", "limit", "offset",
)
_CLAUSE_RANK = {name: rank for rank, name in enumerate(_SELECT_CLAUSES)}
_ALIAS_SCOPES = frozenset({"group", "having", "qualify", "order"})

# Keywords sqlglot accepts as bare aliases; a query ending in one is truncated
_CLAUSE_KEYWORDS = frozenset({
    "select", "from", "where", "group", "by", "having", "order", "limit", "offset",
    "join", "on", "and", "or", "not", "union", "intersect", "except", "as", "in",
    "between", "like", "is", "asc", "desc", "distinct", "inner", "left", "right",
    "outer", "cross", "natural", "using", "case", "when", "then", "else", "end",
})

_QUERY_TYPES = (exp.Select, exp.Union, exp.Intersect, exp.Except)


class SqlAst(BaseModel):
    """A parsed single-statement SELECT query."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sql: str
    root: exp.Expression
    dialect: str = config.SQL_DIALECT

    def to_sql(self, pretty: bool = False) -> str:
        return self.root.sql(dialect=self.dialect, pretty=pretty)

    def tables(self) -> Iterator[exp.Table]:
        return self.root.find_all(exp.Table)

    def columns(self) -> Iterator[exp.Column]:
        return self.root.find_all(exp.Column)

    def literals(self) -> Iterator[exp.Literal]:
        return self.root.find_all(exp.Literal)


def _byte_offset(sql: str, line: Optional[int], col: Optional[int]) -> Optional[int]:
    if not line or col is None:
        return None
    lines = sql.split("\n")
    line = min(line, len(lines))
    chars = sum(len(text) + 1 for text in lines[: line - 1]) + max(col - 1, 0)
    chars = min(chars, len(sql))
    return len(sql[:chars].encode("utf-8"))


def parse_sql(sql: str, dialect: Optional[str] = None) -> SqlAst:
    dialect = dialect or config.SQL_DIALECT
    try:
        statements = sqlglot.parse(sql, read=dialect)
    except ParseError as e:
        detail = e.errors[0] if e.errors else {}
        raise SqlParseError(
            detail.get("description") or str(e),
            offset=_byte_offset(sql, detail.get("line"), detail.get("col")),
            hint=f"near {detail['highlight']!r}" if detail.get("highlight") else None,
        ) from e
    except TokenError as e:
        raise SqlParseError(str(e), offset=len(sql.encode("utf-8")), hint="unterminated literal or identifier") from e

    statements = [statement for statement in statements if statement is not None]
    if len(statements) != 1:
        raise SqlParseError(
            f"expected exactly one statement, found {len(statements)}",
            offset=0 if not statements else None,
            hint="expected SELECT",
        )
    root = statements[0]
    if isinstance(root, exp.Subquery):
        root = root.unnest()
    if not isinstance(root, _QUERY_TYPES):
        raise SqlParseError(
            f"unsupported statement type {root.key.upper()}", offset=0, hint="expected SELECT"
        )
    _check_complete(sql, root)
    return SqlAst(sql=sql, root=root, dialect=dialect)


def _check_complete(sql: str, root: exp.Expression):
    """Reject input sqlglot accepts leniently: empty projections and keywords read as aliases."""
    for select in root.find_all(exp.Select):
        if not select.expressions:
            raise SqlParseError("SELECT without projections", offset=len(sql.encode("utf-8")),
                                hint="expected column list")
    for node in root.find_all(exp.TableAlias, exp.Alias):
        identifier = node.args.get("alias") if isinstance(node, exp.Alias) else node.this
        if not isinstance(identifier, exp.Identifier) or identifier.quoted:
            continue
        if identifier.name.casefold() in _CLAUSE_KEYWORDS:
            raise SqlParseError(f"keyword {identifier.name.upper()} used as an alias",
                                hint=f"incomplete clause near {identifier.name!r}")


def _clauses(node: exp.Expression) -> Iterator[Tuple[str, exp.Expression]]:
    items = list(node.args.items())
    if isinstance(node, exp.Select):
        order = {key: i for i, (key, _) in enumerate(items)}
        items.sort(key=lambda item: (_CLAUSE_RANK.get(item[0], len(_CLAUSE_RANK)), order[item[0]]))
    for key, value in items:
        if isinstance(value, exp.Expression):
            yield key, value
        elif isinstance(value, list):
            for child in value:
                if isinstance(child, exp.Expression):
                    yield key, child


def _children(node: exp.Expression) -> Iterator[exp.Expression]:
    for _, child in _clauses(node):
        yield child


def _select_aliases(select: exp.Select) -> Set[str]:
    return {
        projection.alias.casefold()
        for projection in select.expressions
        if isinstance(projection, exp.Alias) and projection.alias
    }


def _cte_names(root: exp.Expression) -> Set[str]:
    return {cte.alias.casefold() for cte in root.find_all(exp.CTE) if cte.alias}


def _walk(node: exp.Expression, aliases: Set[str], ctes: Set[str]) -> Iterator[DbEntity]:
    if isinstance(node, exp.Select):
        # select-list aliases are only visible to the clauses evaluated after projection
        select_aliases = _select_aliases(node)
        for key, child in _clauses(node):
            yield from _walk(child, select_aliases if key in _ALIAS_SCOPES else set(), ctes)
        return

    if isinstance(node, exp.Table):
        name = node.name
        if name and name.casefold() not in ctes:
            yield DbEntity(text=name, entity_type=EntityType.TABLE)
        # table functions and lateral sources may carry nested queries
        for child in _children(node):
            if isinstance(child, (exp.Subquery, exp.Select)):
                yield from _walk(child, aliases, ctes)
        return
    if isinstance(node, exp.Column):
        if isinstance(node.this, exp.Star):
            return
        name = node.name
        if name and not (not node.table and name.casefold() in aliases):
            yield DbEntity(text=name, entity_type=EntityType.COLUMN)
        return
    if isinstance(node, exp.Literal):
        if node.this != "":
            yield DbEntity(text=str(node.this), entity_type=EntityType.VALUE)
        return
    if isinstance(node, exp.Boolean):
        yield DbEntity(text="TRUE" if node.this else "FALSE", entity_type=EntityType.VALUE)
        return
    if isinstance(node, (exp.Star, exp.Null, exp.Identifier, exp.TableAlias, exp.DataType, exp.Var)):
        return
    if isinstance(node, exp.Alias):
        yield from _walk(node.this, aliases, ctes)
        return
    if isinstance(node, exp.CTE):
        yield from _walk(node.this, aliases, ctes)
        return

    for child in _children(node):
        yield from _walk(child, aliases, ctes)


def extract_entities(ast: SqlAst) -> EntitySet:
    entities = EntitySet.from_entities(_walk(ast.root, set(), _cte_names(ast.root)))
    logger.debug(f"extracted {len(entities)} entities: {', '.join(str(e) for e in entities.entities)}")
    return entities


def entities_from_sql(sql: str, dialect: Optional[str] = None) -> EntitySet:
    return extract_entities(parse_sql(sql, dialect))
