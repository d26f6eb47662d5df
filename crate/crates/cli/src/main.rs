fn main() {
    println!("presym: work in progress");
}
