//! Lowered syntax tree for the supported Java subset.

pub type Line = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prim {
    Byte,
    Short,
    Int,
    Long,
    Float,
    Double,
    Boolean,
    Char,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeRef {
    Prim(Prim),
    /// Simple or qualified class name as written.
    Named(String),
    Array(Box<TypeRef>),
    Void,
    /// `var`
    Infer,
}

impl TypeRef {
    pub fn array_of(self, dims: usize) -> TypeRef {
        (0..dims).fold(self, |t, _| TypeRef::Array(Box::new(t)))
    }
}

#[derive(Debug, Clone)]
pub struct Import {
    pub path: String,
    pub is_static: bool,
    pub wildcard: bool,
}

#[derive(Debug, Clone)]
pub struct Unit {
    pub path: String,
    pub package: Option<String>,
    pub imports: Vec<Import>,
}

#[derive(Debug, Clone)]
pub struct Annotation {
    /// Last segment of the annotation name.
    pub name: String,
    /// `expected = Foo.class` style element values.
    pub class_values: Vec<(String, TypeRef)>,
}

#[derive(Debug, Clone)]
pub struct ClassDecl {
    pub name: String,
    pub fqn: String,
    pub unit: usize,
    pub superclass: Option<String>,
    pub interfaces: Vec<String>,
    pub is_interface: bool,
    pub is_abstract: bool,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub ctors: Vec<CtorDecl>,
    pub static_init: Vec<Block>,
    pub instance_init: Vec<Block>,
    pub line: Line,
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeRef,
    pub is_static: bool,
    pub init: Option<Expr>,
    pub line: Line,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub ty: TypeRef,
}

#[derive(Debug, Clone)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: TypeRef,
    pub is_static: bool,
    pub is_abstract: bool,
    pub annotations: Vec<Annotation>,
    pub body: Option<Block>,
    pub line: Line,
}

impl MethodDecl {
    pub fn has_annotation(&self, name: &str) -> bool {
        self.annotations.iter().any(|a| a.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct ExplicitCtorCall {
    pub is_super: bool,
    pub args: Vec<Expr>,
    pub line: Line,
}

#[derive(Debug, Clone)]
pub struct CtorDecl {
    pub params: Vec<Param>,
    pub explicit: Option<ExplicitCtorCall>,
    pub body: Block,
    pub line: Line,
}

#[derive(Debug, Clone, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub line: Line,
    pub kind: StmtKind,
}

#[derive(Debug, Clone)]
pub struct Declarator {
    pub name: String,
    pub ty: TypeRef,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone)]
pub struct Catch {
    pub types: Vec<String>,
    pub name: String,
    pub body: Block,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    Local(Vec<Declarator>),
    Expr(Expr),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    DoWhile(Box<Stmt>, Expr),
    For {
        init: Vec<Stmt>,
        cond: Option<Expr>,
        update: Vec<Expr>,
        body: Box<Stmt>,
    },
    ForEach {
        ty: TypeRef,
        name: String,
        iter: Expr,
        body: Box<Stmt>,
    },
    Return(Option<Expr>),
    Break(Option<String>),
    Continue(Option<String>),
    Throw(Expr),
    Block(Block),
    Try {
        body: Block,
        catches: Vec<Catch>,
        finally: Option<Block>,
    },
    Labeled(String, Box<Stmt>),
    Assert(Expr, Option<Expr>),
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Int(i32),
    Long(i64),
    Double(f64),
    /// Stored as the widened value; narrowing happens on use.
    Float(f64),
    Bool(bool),
    Char(u16),
    Str(String),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    UShr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitOr,
    BitXor,
    And,
    Or,
}

impl BinOp {
    pub fn from_token(t: &str) -> Option<BinOp> {
        use BinOp::*;
        Some(match t {
            "+" => Add,
            "-" => Sub,
            "*" => Mul,
            "/" => Div,
            "%" => Rem,
            "<<" => Shl,
            ">>" => Shr,
            ">>>" => UShr,
            "<" => Lt,
            "<=" => Le,
            ">" => Gt,
            ">=" => Ge,
            "==" => Eq,
            "!=" => Ne,
            "&" => BitAnd,
            "|" => BitOr,
            "^" => BitXor,
            "&&" => And,
            "||" => Or,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            Shl => "<<",
            Shr => ">>",
            UShr => ">>>",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            And => "&&",
            Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
    BitNot,
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub line: Line,
    pub kind: ExprKind,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Lit(Lit),
    Name(String),
    This,
    Field(Box<Expr>, String),
    SuperField(String),
    Call {
        target: Option<Box<Expr>>,
        is_super: bool,
        name: String,
        args: Vec<Expr>,
    },
    New {
        class: String,
        args: Vec<Expr>,
    },
    NewArray {
        elem: TypeRef,
        dims: Vec<Expr>,
        extra_dims: usize,
        init: Option<Vec<Expr>>,
    },
    /// Bare `{a, b}` in a declaration.
    ArrayInit(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Assign {
        op: Option<BinOp>,
        target: Box<Expr>,
        value: Box<Expr>,
    },
    IncDec {
        prefix: bool,
        inc: bool,
        target: Box<Expr>,
    },
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Cast(TypeRef, Box<Expr>),
    InstanceOf(Box<Expr>, TypeRef),
    ClassLit(TypeRef),
}
