import re
import math
from typing import List, NamedTuple

from anholo.schemas.geometry import Dimensions
from anholo.utils.errors import (
    ExpressionSyntaxError,
    UnknownIdentifierError,
    VariableIndexError,
)
from anholo.models.nodes.expression.tree import (
    UNARY_FUNCTIONS,
    Expression,
    Variable,
    apply,
    binary,
    const,
    neg,
    power,
)


TOKEN_NUMBER = "NUMBER"
TOKEN_IDENT = "IDENT"
TOKEN_OPERATOR = "OPERATOR"
TOKEN_LPAREN = "LPAREN"
TOKEN_RPAREN = "RPAREN"
TOKEN_EOF = "EOF"

NAMED_CONSTANTS = {"pi": math.pi}
VARIABLE_PATTERN = re.compile(r"([xy])([0-9]+)")


class Token(NamedTuple):
    type: str
    value: str
    offset: int


class Tokenizer:
    TOKEN_SPECS = [
        (r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?", TOKEN_NUMBER),
        (r"[A-Za-z_][A-Za-z0-9_]*", TOKEN_IDENT),
        (r"[\+\-\*\/\^]", TOKEN_OPERATOR),
        (r"\(", TOKEN_LPAREN),
        (r"\)", TOKEN_RPAREN),
        (r"\s+", None),
    ]
    _COMPILED_SPECS = [(re.compile(pattern), ttype) for pattern, ttype in TOKEN_SPECS]

    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize()
        self.index = 0

    def _byte_offset(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def _tokenize(self) -> List[Token]:
        tokens = []
        pos = 0
        while pos < len(self.text):
            for regex, ttype in self._COMPILED_SPECS:
                match = regex.match(self.text, pos)
                if match:
                    if ttype:
                        tokens.append(
                            Token(ttype, match.group(0), self._byte_offset(pos))
                        )
                    pos = match.end()
                    break
            else:
                raise ExpressionSyntaxError(
                    f"unexpected character {self.text[pos]!r}",
                    self.text,
                    self._byte_offset(pos),
                )
        tokens.append(Token(TOKEN_EOF, "", self._byte_offset(len(self.text))))
        return tokens

    def peek(self) -> Token:
        return self.tokens[self.index]

    def next(self) -> Token:
        token = self.tokens[self.index]
        if token.type != TOKEN_EOF:
            self.index += 1
        return token


class Parser:
    """
    Recursive-descent parser for the coordinate expression grammar

        expr   := term (('+'|'-') term)*
        term   := unary (('*'|'/') unary)*
        unary  := '-' unary | factor
        factor := base ('^' ['-'] number)?
        base   := number | 'pi' | variable | '(' expr ')' | func '(' expr ')'

    Variables are x1..xn and y1..ym for the given Dimensions.
    """

    def __init__(self, text: str, dims: Dimensions):
        self.text = text
        self.dims = dims
        self.tokens = Tokenizer(text)

    def _error(self, message: str, token: Token, kind=ExpressionSyntaxError):
        return kind(message, self.text, token.offset)

    def _expect(self, ttype: str, value: str = None) -> Token:
        token = self.tokens.next()
        if token.type != ttype or (value is not None and token.value != value):
            expected = value or ttype.lower()
            found = token.value or "end of input"
            raise self._error(f"expected {expected}, found {found!r}", token)
        return token

    def parse(self) -> Expression:
        if self.tokens.peek().type == TOKEN_EOF:
            raise self._error("empty expression", self.tokens.peek())
        result = self._expr()
        token = self.tokens.peek()
        if token.type != TOKEN_EOF:
            raise self._error(f"unexpected token {token.value!r}", token)
        return result

    def _expr(self) -> Expression:
        left = self._term()
        while self._at_operator("+", "-"):
            token = self.tokens.next()
            left = binary(token.value, left, self._term(), token.offset)
        return left

    def _term(self) -> Expression:
        left = self._unary()
        while self._at_operator("*", "/"):
            token = self.tokens.next()
            left = binary(token.value, left, self._unary(), token.offset)
        return left

    def _unary(self) -> Expression:
        if self._at_operator("-"):
            token = self.tokens.next()
            return neg(self._unary(), token.offset)
        return self._factor()

    def _factor(self) -> Expression:
        base = self._base()
        if self._at_operator("^"):
            token = self.tokens.next()
            sign = 1.0
            if self._at_operator("-"):
                self.tokens.next()
                sign = -1.0
            number = self._expect(TOKEN_NUMBER)
            return power(base, sign * float(number.value), token.offset)
        return base

    def _base(self) -> Expression:
        token = self.tokens.next()
        if token.type == TOKEN_NUMBER:
            return const(float(token.value), token.offset)
        if token.type == TOKEN_LPAREN:
            inner = self._expr()
            self._expect(TOKEN_RPAREN)
            return inner
        if token.type == TOKEN_IDENT:
            return self._identifier(token)
        found = token.value or "end of input"
        raise self._error(f"unexpected token {found!r}", token)

    def _identifier(self, token: Token) -> Expression:
        name = token.value
        if name in UNARY_FUNCTIONS:
            self._expect(TOKEN_LPAREN)
            argument = self._expr()
            self._expect(TOKEN_RPAREN)
            return apply(name, argument, token.offset)
        if name in NAMED_CONSTANTS:
            return const(NAMED_CONSTANTS[name], token.offset)
        match = VARIABLE_PATTERN.fullmatch(name)
        if not match:
            raise self._error(
                f"unknown identifier {name!r}", token, UnknownIdentifierError
            )
        kind, index = match.group(1), int(match.group(2))
        bound = self.dims.n if kind == "x" else self.dims.m
        if not 1 <= index <= bound:
            raise self._error(
                f"variable index out of range: {name} (dims n={self.dims.n}, "
                f"m={self.dims.m})",
                token,
                VariableIndexError,
            )
        return Variable(kind, index, token.offset)

    def _at_operator(self, *values: str) -> bool:
        token = self.tokens.peek()
        return token.type == TOKEN_OPERATOR and token.value in values


def parse(text: str, dims: Dimensions) -> Expression:
    return Parser(text, dims).parse()


def parse_constant(text, dims: Dimensions = None) -> float:
    """
    Reads a number given either as a JSON number or as a constant
    expression such as "pi/4".
    """
    if isinstance(text, (int, float)):
        return float(text)
    dims = dims or Dimensions(n=1, m=1)
    value = parse(str(text), dims)
    if not hasattr(value, "value"):
        raise ExpressionSyntaxError("expected a constant expression", str(text), 0)
    return float(value.value)
