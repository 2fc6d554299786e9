import pytest

from errors import SqlParseError
from models import EntityType
from sql_entities import entities_from_sql, extract_entities, parse_sql


def _as_strings(sql):
    return [str(entity) for entity in entities_from_sql(sql).entities]


def test_movie_query_entities():
    """Entities come out in select, from, where, order order"""
    assert _as_strings("SELECT title FROM movies WHERE year = 1945 ORDER BY pop") == [
        "title:C", "movies:T", "year:C", "1945:V", "pop:C",
    ]


def test_movie_query_ast_nodes():
    """One table node, three column references, one numeric literal"""
    ast = parse_sql("SELECT title FROM movies WHERE year = 1945 ORDER BY pop")
    assert [table.name for table in ast.tables()] == ["movies"]
    assert sorted(column.name for column in ast.columns()) == ["pop", "title", "year"]
    assert [literal.this for literal in ast.literals()] == ["1945"]


def test_minimal_select():
    """A query without FROM yields only its literal"""
    assert _as_strings("SELECT 1") == ["1:V"]


def test_star_is_excluded():
    """* is never a column entity"""
    assert _as_strings("SELECT * FROM t") == ["t:T"]
    assert _as_strings("SELECT count(*) FROM singer") == ["singer:T"]


def test_aliases_are_excluded():
    """Table aliases and qualifiers never become entities"""
    assert set(_as_strings("SELECT a.name FROM artists AS a WHERE a.name LIKE 'Bob%'")) == {
        "name:C", "artists:T", "Bob%:V",
    }
    joined = set(_as_strings("SELECT a.name FROM artists AS a JOIN albums ON a.id = albums.artist_id"))
    assert joined == {"name:C", "artists:T", "albums:T", "id:C", "artist_id:C"}


def test_select_alias_target_excluded():
    """An alias defined in the select list is not a column, the aggregated column is"""
    entities = _as_strings("SELECT count(age) AS n FROM singer GROUP BY country ORDER BY n DESC")
    assert set(entities) == {"age:C", "singer:T", "country:C"}


def test_aliased_expression_keeps_its_column():
    """A column inside an aliased projection is kept even when the alias reuses its name"""
    assert _as_strings("SELECT max(age) AS age FROM singer") == ["age:C", "singer:T"]
    assert _as_strings("SELECT name AS name FROM singer ORDER BY name") == ["name:C", "singer:T"]
    assert _as_strings("SELECT name AS n FROM singer WHERE n = 'x'") == ["name:C", "singer:T", "n:C", "x:V"]


def test_functions_and_keywords_never_entities():
    """Aggregate function names and keywords are not extracted"""
    sql = (
        "SELECT max(age), min(age), avg(salary), sum(salary) FROM employees "
        "WHERE dept IN ('a', 'b') AND age BETWEEN 20 AND 30 GROUP BY dept HAVING count(*) > 1 "
        "ORDER BY dept DESC LIMIT 5"
    )
    texts = {entity.norm_text for entity in entities_from_sql(sql).entities}
    for word in ("max", "min", "avg", "sum", "count", "select", "where", "between", "limit", "desc", "in"):
        assert word not in texts
    assert {"age", "salary", "dept", "employees", "a", "b", "20", "30", "1", "5"} <= texts


def test_subqueries_and_set_operations():
    """Nested queries and UNION branches are walked"""
    nested = set(_as_strings("SELECT name FROM singer WHERE singer_id IN (SELECT singer_id FROM concert)"))
    assert nested == {"name:C", "singer:T", "singer_id:C", "concert:T"}
    union = _as_strings("SELECT name FROM teachers UNION SELECT name FROM students")
    assert union == ["name:C", "teachers:T", "students:T"]


def test_cte_name_is_not_a_table():
    """A WITH name refers to the query, not to a database table"""
    entities = set(_as_strings("WITH recent AS (SELECT title FROM movies WHERE year > 2000) SELECT title FROM recent"))
    assert entities == {"title:C", "movies:T", "year:C", "2000:V"}


def test_literal_forms():
    """String literals are dequoted, numbers kept verbatim, NULL dropped"""
    entities = _as_strings("SELECT id FROM people WHERE name = 'O''Brien' AND price = 3.50 AND note IS NULL")
    assert "O'Brien:V" in entities
    assert "3.50:V" in entities
    assert all(not text.upper().startswith("NULL") for text in entities)


def test_quoted_identifiers():
    """Backticks and double quotes delimit identifiers"""
    assert _as_strings('SELECT `name` FROM "singer"') == ["name:C", "singer:T"]


def test_duplicates_collapse():
    """Repeated references keep their first occurrence only"""
    assert _as_strings("SELECT name FROM t WHERE name = 'x' OR name = 'x'") == ["name:C", "t:T", "x:V"]


def test_same_text_different_types_kept():
    """A column and a value with the same text are distinct entities"""
    entities = entities_from_sql("SELECT name FROM t WHERE kind = 'name'").entities
    assert [(entity.norm_text, entity.entity_type) for entity in entities] == [
        ("name", EntityType.COLUMN), ("t", EntityType.TABLE), ("kind", EntityType.COLUMN), ("name", EntityType.VALUE),
    ]


def test_pretty_print_round_trip():
    """Re-parsing pretty-printed SQL gives the same entity set"""
    queries = [
        "SELECT title FROM movies WHERE year = 1945 ORDER BY pop",
        "SELECT T1.name FROM singer AS T1 JOIN concert AS T2 ON T1.id = T2.singer_id WHERE T2.year = '2014'",
        "SELECT count(*) FROM cars WHERE mpg > (SELECT avg(mpg) FROM cars) GROUP BY make HAVING count(*) >= 2",
    ]
    for sql in queries:
        ast = parse_sql(sql)
        again = parse_sql(ast.to_sql(pretty=True))
        assert extract_entities(again) == extract_entities(ast)


def test_parse_errors_carry_position():
    """Syntax errors become SqlParseError with an offset inside the query"""
    sql = "SELECT name FROM singer WHERE ("
    with pytest.raises(SqlParseError) as excinfo:
        parse_sql(sql)
    offset = excinfo.value.offset
    assert offset is None or 0 <= offset <= len(sql.encode("utf-8"))

    unterminated = "SELECT name FROM singer WHERE name = 'open"
    with pytest.raises(SqlParseError) as excinfo:
        parse_sql(unterminated)
    offset = excinfo.value.offset
    assert offset is None or 0 <= offset <= len(unterminated.encode("utf-8"))


def test_rejects_non_select_and_multiple_statements():
    """Only single SELECT statements are accepted"""
    for sql in ("DELETE FROM singer", "INSERT INTO t VALUES (1)", "SELECT 1; SELECT 2"):
        with pytest.raises(SqlParseError) as excinfo:
            parse_sql(sql)
        assert excinfo.value.hint == "expected SELECT"


def test_rejects_truncated_queries():
    """Empty projections and clause keywords read as aliases are parse errors"""
    for sql in ("SELECT", "SELECT * FROM t ORDER"):
        with pytest.raises(SqlParseError):
            parse_sql(sql)


def test_quoted_keyword_alias_allowed():
    """A quoted alias may spell a keyword"""
    assert _as_strings('SELECT name AS "order" FROM singer') == ["name:C", "singer:T"]


def test_record_id_in_message():
    """with_record attaches the record id to the message"""
    error = SqlParseError("Expecting )", offset=12, hint="near '('").with_record("q42")
    assert str(error) == "SQL parse error (record q42, byte 12): Expecting ); near '('"
