"""Parser and analysis-graph builder for a small scripting language.

The language covers just enough surface to exercise queries end to end:
`let` bindings, function declarations (with optional default parameter
values and `@Name` annotations), `return`, calls with positional and
named arguments, method calls, string/number/boolean literals.

The graph builder emits one node per declaration, parameter, literal,
call and identifier occurrence, and wires dataflow as definition-to-use
plus use-to-next-use ordering edges.  Calls to functions declared earlier
in the input get one interprocedural hop: actual into formal on entry,
and the formal's last use back to the caller's next use of the actual on
exit.  Method receivers become `arg0` edges; positional arguments
`arg1`..`arg7`; named arguments `named_arg` with the name stored on the
value node.  Must-alias classes (through bindings and parameter passing)
are closed reflexively and symmetrically into `same_object`.  Every
dataflow edge is mirrored into `taint`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

KEYWORDS = {"let", "function", "return", "true", "false"}

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>//[^\n]*)"
    r"|(?P<number>\d+(?:\.\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<string>\"(?:[^\"\\\n]|\\.)*\")"
    r"|(?P<punct>[(){},;=.@])"
)


class ToySyntaxError(ValueError):
    def __init__(self, message: str, filename: str, line: int, col: int):
        super().__init__(f"{filename}:{line}:{col}: {message}")
        self.filename = filename
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Pos:
    line: int
    col: int


@dataclass(frozen=True)
class Ident:
    name: str
    pos: Pos


@dataclass(frozen=True)
class LiteralExpr:
    kind: str  # StringLiteral | NumberLiteral | BooleanLiteral
    text: str
    pos: Pos


@dataclass(frozen=True)
class Member:
    obj: object
    field: str
    pos: Pos


@dataclass(frozen=True)
class Call:
    callee: object
    args: tuple          # of expression
    named: tuple         # of (name, expression)
    pos: Pos


@dataclass(frozen=True)
class Let:
    name: str
    value: object
    pos: Pos


@dataclass(frozen=True)
class Param:
    name: str
    default: object | None
    pos: Pos


@dataclass(frozen=True)
class Func:
    name: str
    params: tuple
    body: tuple
    annotations: tuple
    pos: Pos


@dataclass(frozen=True)
class Return:
    value: object
    pos: Pos


@dataclass(frozen=True)
class ExprStmt:
    expr: object


@dataclass(frozen=True)
class Module:
    filename: str
    statements: tuple


class _Lexer:
    def __init__(self, text: str, filename: str):
        self.filename = filename
        self.tokens = []
        line, col = 1, 1
        pos = 0
        while pos < len(text):
            match = _TOKEN.match(text, pos)
            if not match:
                raise ToySyntaxError(f"unexpected character {text[pos]!r}",
                                     filename, line, col)
            kind = match.lastgroup
            value = match.group(0)
            if kind not in ("ws", "comment"):
                self.tokens.append((kind, value, line, col))
            newlines = value.count("\n")
            if newlines:
                line += newlines
                col = len(value) - value.rfind("\n")
            else:
                col += len(value)
            pos = match.end()
        self.tokens.append(("eof", "", line, col))
        self.index = 0

    def peek(self, ahead: int = 0):
        return self.tokens[min(self.index + ahead, len(self.tokens) - 1)]

    def next(self):
        token = self.tokens[self.index]
        if token[0] != "eof":
            self.index += 1
        return token

    def expect(self, kind: str, value: str | None = None):
        token = self.next()
        if token[0] != kind or (value is not None and token[1] != value):
            want = value if value is not None else kind
            raise ToySyntaxError(
                f"expected {want!r}, found {token[1] or 'end of file'!r}",
                self.filename, token[2], token[3])
        return token

    def at(self, kind: str, value: str | None = None) -> bool:
        token = self.peek()
        return token[0] == kind and (value is None or token[1] == value)


def parse_source(text: str, filename: str) -> Module:
    lexer = _Lexer(text, filename)
    statements = []
    while not lexer.at("eof"):
        statements.append(_parse_statement(lexer))
    return Module(filename, tuple(statements))


def _parse_statement(lexer: _Lexer):
    annotations = []
    while lexer.at("punct", "@"):
        lexer.next()
        name = lexer.expect("ident")
        annotations.append(Ident(name[1], Pos(name[2], name[3])))
    if annotations and not lexer.at("ident", "function"):
        token = lexer.peek()
        raise ToySyntaxError("annotations may only precede functions",
                             lexer.filename, token[2], token[3])

    if lexer.at("ident", "function"):
        return _parse_function(lexer, tuple(annotations))
    if lexer.at("ident", "let"):
        lexer.next()
        name = lexer.expect("ident")
        lexer.expect("punct", "=")
        value = _parse_expression(lexer)
        lexer.expect("punct", ";")
        return Let(name[1], value, Pos(name[2], name[3]))
    if lexer.at("ident", "return"):
        keyword = lexer.next()
        value = _parse_expression(lexer)
        lexer.expect("punct", ";")
        return Return(value, Pos(keyword[2], keyword[3]))
    expr = _parse_expression(lexer)
    lexer.expect("punct", ";")
    return ExprStmt(expr)


def _parse_function(lexer: _Lexer, annotations) -> Func:
    keyword = lexer.expect("ident", "function")
    name = lexer.expect("ident")
    lexer.expect("punct", "(")
    params = []
    if not lexer.at("punct", ")"):
        while True:
            pname = lexer.expect("ident")
            default = None
            if lexer.at("punct", "="):
                lexer.next()
                default = _parse_expression(lexer)
            params.append(Param(pname[1], default, Pos(pname[2], pname[3])))
            if lexer.at("punct", ","):
                lexer.next()
                continue
            break
    lexer.expect("punct", ")")
    lexer.expect("punct", "{")
    body = []
    while not lexer.at("punct", "}"):
        body.append(_parse_statement(lexer))
    lexer.expect("punct", "}")
    return Func(name[1], tuple(params), tuple(body), annotations,
                Pos(keyword[2], keyword[3]))


def _parse_expression(lexer: _Lexer):
    return _parse_postfix(lexer)


def _parse_postfix(lexer: _Lexer):
    expr = _parse_primary(lexer)
    while True:
        if lexer.at("punct", "."):
            lexer.next()
            name = lexer.expect("ident")
            expr = Member(expr, name[1], Pos(name[2], name[3]))
            continue
        if lexer.at("punct", "("):
            args, named = _parse_arguments(lexer)
            pos = expr.pos if hasattr(expr, "pos") else Pos(1, 1)
            expr = Call(expr, args, named, pos)
            continue
        return expr


def _parse_arguments(lexer: _Lexer):
    lexer.expect("punct", "(")
    args = []
    named = []
    if not lexer.at("punct", ")"):
        while True:
            if (lexer.at("ident") and lexer.peek()[1] not in KEYWORDS
                    and lexer.peek(1)[:2] == ("punct", "=")):
                name = lexer.next()
                lexer.next()
                named.append((name[1], _parse_expression(lexer)))
            else:
                value = _parse_expression(lexer)
                if named:
                    raise ToySyntaxError(
                        "positional arguments cannot follow named arguments",
                        lexer.filename, lexer.peek()[2], lexer.peek()[3])
                args.append(value)
            if lexer.at("punct", ","):
                lexer.next()
                continue
            break
    lexer.expect("punct", ")")
    return tuple(args), tuple(named)


def _parse_primary(lexer: _Lexer):
    token = lexer.peek()
    if token[0] == "ident" and token[1] in ("true", "false"):
        lexer.next()
        return LiteralExpr("BooleanLiteral", token[1], Pos(token[2], token[3]))
    if token[0] == "ident":
        if token[1] in KEYWORDS:
            raise ToySyntaxError(f"unexpected keyword {token[1]!r}",
                                 lexer.filename, token[2], token[3])
        lexer.next()
        return Ident(token[1], Pos(token[2], token[3]))
    if token[0] == "number":
        lexer.next()
        return LiteralExpr("NumberLiteral", token[1], Pos(token[2], token[3]))
    if token[0] == "string":
        lexer.next()
        content = token[1][1:-1].replace('\\"', '"').replace("\\\\", "\\")
        return LiteralExpr("StringLiteral", content, Pos(token[2], token[3]))
    if token[0] == "punct" and token[1] == "(":
        lexer.next()
        inner = _parse_expression(lexer)
        lexer.expect("punct", ")")
        return inner
    raise ToySyntaxError(f"expected an expression, found "
                         f"{token[1] or 'end of file'!r}",
                         lexer.filename, token[2], token[3])


# ---------------------------------------------------------------------------
# graph construction


@dataclass
class BuildOutput:
    document: dict
    warnings: list[str]
    node_count: int
    edge_count: int


class _Var:
    __slots__ = ("decl", "tail", "pending")

    def __init__(self, decl: int):
        self.decl = decl
        self.tail = decl       # last node in the definition-use chain
        self.pending = []      # callee-side tails to splice into the next use


class _FuncInfo:
    def __init__(self, node: int, params):
        self.node = node
        self.params = params            # list of (name, param node)
        self.param_tail: dict[str, int] = {}
        self.return_values: list[int] = []
        self.building = False


class _Builder:
    MAX_POSITIONAL = 7

    def __init__(self):
        self.nodes: list[dict] = []
        self.binary: dict[str, list] = {}
        self.warnings: list[str] = []
        self.functions: dict[str, _FuncInfo] = {}
        self.alias_parent: dict[int, int] = {}
        self.file_node = -1
        self.filename = ""

    # -- node and edge helpers

    def add_node(self, kind: str, name: str, pos: Pos | None,
                 extra_attrs: dict | None = None) -> int:
        node_id = len(self.nodes)
        attrs = {"name": name, "file": self.filename}
        if pos is not None:
            attrs["line"] = str(pos.line)
            attrs["col"] = str(pos.col)
        if extra_attrs:
            attrs.update(extra_attrs)
        self.nodes.append({"id": node_id, "kind": kind, "attrs": attrs})
        if kind != "File":
            self.edge("in_file", node_id, self.file_node)
        return node_id

    def edge(self, relation: str, a: int, b: int):
        self.binary.setdefault(relation, []).append([a, b])

    def flow(self, a: int, b: int):
        if a != b:
            self.edge("dataflow", a, b)

    def union(self, a: int, b: int):
        self.alias_parent.setdefault(a, a)
        self.alias_parent.setdefault(b, b)
        self.alias_parent[self.find(a)] = self.find(b)

    def find(self, x: int) -> int:
        parent = self.alias_parent
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    # -- module walk

    def build_module(self, module: Module):
        self.filename = module.filename
        self.file_node = self.add_node("File", module.filename, None)
        env: dict[str, _Var] = {}
        for statement in module.statements:
            self.build_statement(statement, env)

    def build_statement(self, statement, env):
        if isinstance(statement, Let):
            value = self.build_expr(statement.value, env)
            decl = self.add_node("Identifier", statement.name, statement.pos)
            self.flow(value, decl)
            self.union(value, decl)
            env[statement.name] = _Var(decl)
        elif isinstance(statement, Func):
            self.build_function(statement, env)
        elif isinstance(statement, Return):
            self.warnings.append(
                f"{self.filename}: 'return' outside a function is ignored")
        else:
            self.build_expr(statement.expr, env)

    def build_function(self, func: Func, outer_env):
        fn_node = self.add_node("FunctionDecl", func.name, func.pos)
        for annotation in func.annotations:
            ann_node = self.add_node("Annotation", annotation.name,
                                     annotation.pos)
            self.edge("annotated_by", fn_node, ann_node)
        params = []
        local_env: dict[str, _Var] = dict(outer_env)
        for index, param in enumerate(func.params, start=1):
            default_node = None
            if param.default is not None:
                # defaults are evaluated when the declaration is evaluated
                default_node = self.build_expr(param.default, outer_env)
            param_node = self.add_node("Parameter", param.name, param.pos,
                                       {"arg_name": param.name})
            if index <= self.MAX_POSITIONAL:
                self.edge(f"param{index}", fn_node, param_node)
            else:
                self.warnings.append(
                    f"{self.filename}: parameter {param.name!r} of "
                    f"{func.name!r} is beyond position {self.MAX_POSITIONAL}")
            if default_node is not None:
                self.flow(default_node, param_node)
                self.flow(default_node, fn_node)
                self.union(default_node, param_node)
            params.append((param.name, param_node))
            local_env[param.name] = _Var(param_node)
        info = _FuncInfo(fn_node, params)
        self.functions[func.name] = info

        info.building = True
        for statement in func.body:
            if isinstance(statement, Return):
                value = self.build_expr(statement.value, local_env)
                self.edge("returns", fn_node, value)
                self.edge("returned_by", value, fn_node)
                info.return_values.append(value)
            else:
                self.build_statement(statement, local_env)
        info.building = False
        for name, _node in params:
            info.param_tail[name] = local_env[name].tail

    def build_expr(self, expr, env) -> int:
        if isinstance(expr, LiteralExpr):
            return self.add_node(expr.kind, expr.text, expr.pos)
        if isinstance(expr, Ident):
            return self.build_use(expr, env)
        if isinstance(expr, Member):
            obj = self.build_expr(expr.obj, env)
            node = self.add_node("Other", expr.field, expr.pos)
            self.flow(obj, node)
            return node
        if isinstance(expr, Call):
            return self.build_call(expr, env)
        raise TypeError(f"unknown expression {expr!r}")

    def build_use(self, ident: Ident, env) -> int:
        var = env.get(ident.name)
        use = self.add_node("Identifier", ident.name, ident.pos)
        if var is None:
            self.warnings.append(
                f"{self.filename}:{ident.pos.line}: unresolved name "
                f"{ident.name!r}")
            return use
        self.flow(var.decl, use)
        if var.tail != var.decl:
            self.flow(var.tail, use)
        for source in var.pending:
            self.flow(source, use)
        var.pending.clear()
        var.tail = use
        self.union(var.decl, use)
        return use

    def build_call(self, call: Call, env) -> int:
        receiver = None
        callee_name = "<anonymous>"
        if isinstance(call.callee, Ident):
            callee_name = call.callee.name
        elif isinstance(call.callee, Member):
            callee_name = call.callee.field
            receiver = self.build_expr(call.callee.obj, env)
        else:
            self.warnings.append(f"{self.filename}: cannot name the callee "
                                 f"of a computed call")
        arg_nodes = [self.build_expr(a, env) for a in call.args]
        named_nodes = []
        for name, value in call.named:
            node = self.build_expr(value, env)
            self.nodes[node]["attrs"]["arg_name"] = name
            named_nodes.append((name, node))
        call_node = self.add_node("CallExpression", callee_name, call.pos)
        if receiver is not None:
            self.edge("arg0", call_node, receiver)
        for index, node in enumerate(arg_nodes, start=1):
            if index <= self.MAX_POSITIONAL:
                self.edge(f"arg{index}", call_node, node)
        for name, node in named_nodes:
            self.edge("named_arg", call_node, node)

        if receiver is None:
            info = self.functions.get(callee_name)
            if info is None:
                self.warnings.append(
                    f"{self.filename}:{call.pos.line}: call to undeclared "
                    f"function {callee_name!r}; no interprocedural edges")
            elif info.building:
                self.warnings.append(
                    f"{self.filename}:{call.pos.line}: recursive call to "
                    f"{callee_name!r} is not followed")
            else:
                self.link_call(call, info, arg_nodes, named_nodes, call_node,
                               env)
        return call_node

    def link_call(self, call: Call, info: _FuncInfo, arg_nodes, named_nodes,
                  call_node: int, env):
        named = dict(named_nodes)
        for index, (pname, pnode) in enumerate(info.params):
            actual = None
            if index < len(arg_nodes):
                actual = arg_nodes[index]
                actual_expr = call.args[index]
            elif pname in named:
                actual = named[pname]
                actual_expr = None
            if actual is None:
                continue
            self.flow(actual, pnode)
            self.union(actual, pnode)
            exit_tail = info.param_tail.get(pname, pnode)
            if (isinstance(actual_expr, Ident)
                    and actual_expr.name in env):
                env[actual_expr.name].pending.append(exit_tail)
        for value in info.return_values:
            self.flow(value, call_node)

    # -- output

    def document(self) -> dict:
        kinds: dict[str, list[int]] = {}
        for node in self.nodes:
            kinds.setdefault(f"kind_{node['kind'].lower()}", []).append(
                node["id"])
        classes: dict[int, list[int]] = {}
        for node_id in range(len(self.nodes)):
            classes.setdefault(self.find(node_id), []).append(node_id)
        same_object = []
        for members in classes.values():
            for a in members:
                for b in members:
                    same_object.append([a, b])
        binary = {name: pairs for name, pairs in sorted(self.binary.items())}
        binary["same_object"] = same_object
        binary["taint"] = [list(pair) for pair in binary.get("dataflow", [])]
        return {
            "nodes": self.nodes,
            "unary": dict(sorted(kinds.items())),
            "binary": binary,
        }


def build_graph(modules) -> BuildOutput:
    """Build one merged analysis graph from parsed modules."""
    builder = _Builder()
    for module in modules:
        builder.build_module(module)
    document = builder.document()
    edge_count = sum(len(pairs) for pairs in document["binary"].values())
    return BuildOutput(
        document=document,
        warnings=builder.warnings,
        node_count=len(document["nodes"]),
        edge_count=edge_count,
    )
